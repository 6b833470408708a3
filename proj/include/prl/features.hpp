#ifndef PRL_FEATURES_HPP_
#define PRL_FEATURES_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace prl {

inline constexpr std::size_t kFeatureDim = 1u << 16;

// Hash ranges inside [0, kFeatureDim).
struct FeatureLayout {
  static constexpr std::uint32_t kPromptBegin = 0;
  static constexpr std::uint32_t kPromptEnd = 24576;
  static constexpr std::uint32_t kPrefixBegin = kPromptEnd;
  static constexpr std::uint32_t kPrefixEnd = 49152;
  static constexpr std::uint32_t kLastLineBegin = kPrefixEnd;
  static constexpr std::uint32_t kLastLineEnd = 65520;
  static constexpr std::uint32_t kLastLineLength = kLastLineEnd;
  static constexpr std::uint32_t kLastLineIndent = kLastLineEnd + 1;
};

// Sparse storage over the logical dimension kFeatureDim; indices are sorted
// and unique.
struct FeatureVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  double norm = 0.0;  // L2 norm before normalization

  std::size_t nnz() const { return index.size(); }
  std::vector<double> dense() const;
  double dot(const double* weights) const;
  // Feature value at a logical index (0 when absent).
  double at(std::uint32_t i) const;
};

// Hashed character n-grams (n = 2, 3, 4) of the prompt and of the prefix in
// disjoint ranges, plus n-grams, length and indent depth of the prefix's
// last line. Each n-gram block is scaled to unit norm before the whole
// vector is L2-normalized.
FeatureVector featurize(std::string_view prompt, std::string_view prefix);

}  // namespace prl

#endif  // PRL_FEATURES_HPP_
