#include "fewner/sampling.hpp"

#include <algorithm>

#include "fewner/errors.hpp"

namespace fewner {

void SamplingConfig::validate() const {
  if (!(p_geometric > 0.0 && p_geometric < 1.0))
    throw ValidationError("p_geometric must lie strictly between 0 and 1");
}

SamplingMode parse_sampling_mode(const std::string& name) {
  if (name == "sampled") return SamplingMode::kSampled;
  if (name == "labels_only" || name == "labels-only") return SamplingMode::kLabelsOnly;
  if (name == "description_only" || name == "description-only")
    return SamplingMode::kDescriptionOnly;
  if (name == "all") return SamplingMode::kAll;
  throw ValidationError("unknown sampling mode '" + name +
                        "' (expected sampled, labels_only, description_only or all)");
}

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kSampled: return "sampled";
    case SamplingMode::kLabelsOnly: return "labels_only";
    case SamplingMode::kDescriptionOnly: return "description_only";
    case SamplingMode::kAll: return "all";
  }
  return "?";
}

std::uint64_t sample_tag_count(Rng& rng, double p, std::uint64_t max_n) {
  if (max_n < 1) throw ValidationError("sample_tag_count needs max_n >= 1");
  return std::min(rng.next_geometric(p), max_n);
}

namespace {

std::string sampled_tags(const std::vector<std::string>& pool,
                         const SamplingConfig& config, Rng& rng) {
  const std::uint64_t n = sample_tag_count(rng, config.p_geometric, pool.size());
  const std::vector<std::size_t> picks =
      rng.sample_indices(pool.size(), static_cast<std::size_t>(n));
  std::string out;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (i > 0) out += config.tag_separator;
    out += pool[picks[i]];
  }
  return out;
}

std::string all_tags(const std::vector<std::string>& pool, const SamplingConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i > 0) out += config.tag_separator;
    out += pool[i];
  }
  return out;
}

}  // namespace

std::string sample_type_verbalization(const KBEntityRecord& record,
                                      const SamplingConfig& config, Rng& rng) {
  config.validate();
  const std::vector<std::string> pool = record.tag_pool();
  const bool have_description = !record.description.empty();
  const bool have_labels = !pool.empty();
  if (!have_description && !have_labels)
    throw ValidationError("record " + record.qid + " has no description and no labels");

  switch (config.mode) {
    case SamplingMode::kDescriptionOnly:
      return have_description ? record.description : sampled_tags(pool, config, rng);
    case SamplingMode::kLabelsOnly:
      return have_labels ? sampled_tags(pool, config, rng) : record.description;
    case SamplingMode::kAll:
      if (!have_description) return all_tags(pool, config);
      if (!have_labels) return record.description;
      return record.description + config.tag_separator + all_tags(pool, config);
    case SamplingMode::kSampled: {
      const bool pick_description = rng.next_uniform() < 0.5;
      if (pick_description)
        return have_description ? record.description : sampled_tags(pool, config, rng);
      return have_labels ? sampled_tags(pool, config, rng) : record.description;
    }
  }
  throw RuntimeError("unreachable sampling mode");
}

}  // namespace fewner
