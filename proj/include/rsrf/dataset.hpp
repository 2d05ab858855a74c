#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsrf {

/// Immutable regression sample: features in [0,1]^d (row major) plus responses.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::vector<double> responses,
          std::size_t dim)
      : features_(std::move(features)),
        responses_(std::move(responses)),
        dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("Dataset: dim must be >= 1");
    if (responses_.empty()) throw std::invalid_argument("Dataset: n must be >= 1");
    if (features_.size() != responses_.size() * dim_)
      throw std::invalid_argument("Dataset: feature matrix is not n x d");
    for (double v : features_)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("Dataset: feature outside [0,1]: " +
                                    std::to_string(v));
  }

  std::size_t n() const { return responses_.size(); }
  std::size_t dim() const { return dim_; }

  double x(std::size_t i, std::size_t j) const { return features_[i * dim_ + j]; }
  double y(std::size_t i) const { return responses_[i]; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  std::span<const double> responses() const { return responses_; }

 private:
  std::vector<double> features_;
  std::vector<double> responses_;
  std::size_t dim_;
};

}  // namespace rsrf
