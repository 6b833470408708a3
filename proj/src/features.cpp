#include "prl/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "prl/pylex.hpp"
#include "prl/util.hpp"

namespace prl {

namespace {

using Counts = std::map<std::uint32_t, double>;

void add_ngrams(std::string_view text, std::uint32_t begin, std::uint32_t end,
                Counts& counts) {
  const std::uint32_t width = end - begin;
  for (std::size_t n = 2; n <= 4; ++n) {
    if (text.size() < n) break;
    // The n-gram length is folded into the hash so "ab" and "ab " differ.
    const std::uint64_t salt = fnv1a(std::string_view("ng")) + n;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      const auto h = fnv1a(text.substr(i, n), salt);
      counts[begin + static_cast<std::uint32_t>(h % width)] += 1.0;
    }
  }
}

void unit_scale(Counts& block) {
  double sq = 0.0;
  for (const auto& [i, v] : block) sq += v * v;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& [i, v] : block) v *= inv;
}

}  // namespace

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(kFeatureDim, 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = value[k];
  return out;
}

double FeatureVector::dot(const double* weights) const {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    s += value[k] * weights[index[k]];
  }
  return s;
}

double FeatureVector::at(std::uint32_t i) const {
  const auto it = std::lower_bound(index.begin(), index.end(), i);
  return it != index.end() && *it == i ? value[it - index.begin()] : 0.0;
}

FeatureVector featurize(std::string_view prompt, std::string_view prefix) {
  using L = FeatureLayout;
  Counts prompt_block, prefix_block, last_block;
  add_ngrams(prompt, L::kPromptBegin, L::kPromptEnd, prompt_block);
  add_ngrams(prefix, L::kPrefixBegin, L::kPrefixEnd, prefix_block);

  std::string_view last = prefix;
  if (const auto nl = prefix.rfind('\n'); nl != std::string_view::npos) {
    last = prefix.substr(nl + 1);
  }
  const auto stripped = trim(last);
  add_ngrams(stripped, L::kLastLineBegin, L::kLastLineEnd, last_block);
  unit_scale(prompt_block);
  unit_scale(prefix_block);
  unit_scale(last_block);

  Counts all;
  for (const Counts* b : {&prompt_block, &prefix_block, &last_block}) {
    all.insert(b->begin(), b->end());
  }
  if (!prefix.empty()) {
    all[L::kLastLineLength] =
        std::min(1.0, static_cast<double>(stripped.size()) / 80.0);
    all[L::kLastLineIndent] =
        std::min(1.0, static_cast<double>(pylex::indent_of(last).size()) / 16.0);
  }

  FeatureVector fv;
  double sq = 0.0;
  for (const auto& [i, v] : all) {
    if (v == 0.0) continue;
    fv.index.push_back(i);
    fv.value.push_back(v);
    sq += v * v;
  }
  fv.norm = std::sqrt(sq);
  if (fv.norm > 0.0) {
    for (auto& v : fv.value) v /= fv.norm;
  }
  return fv;
}

}  // namespace prl
