#ifndef FEWNER_SAMPLING_HPP
#define FEWNER_SAMPLING_HPP

#include <cstdint>
#include <string>

#include "fewner/kb.hpp"
#include "fewner/rng.hpp"

namespace fewner {

// How a mention's type verbalization is derived from its entity record.
enum class SamplingMode {
  kSampled,          // coin flip between the description and sampled labels
  kLabelsOnly,       // always the sampled-labels branch
  kDescriptionOnly,  // always the description
  kAll               // description plus every label, in stable order
};

struct SamplingConfig {
  SamplingMode mode = SamplingMode::kSampled;
  double p_geometric = 0.5;
  std::uint64_t seed = 0;
  std::string tag_separator = ", ";
  // Draw one verbalization per unique entity instead of one per mention.
  bool per_entity = false;

  void validate() const;
};

SamplingMode parse_sampling_mode(const std::string& name);
std::string to_string(SamplingMode mode);

// Number of tags to concatenate: geometric on {1,2,3,...} with success
// probability p, truncated to max_n.
std::uint64_t sample_tag_count(Rng& rng, double p, std::uint64_t max_n);

// One verbalization string for one mention of `record`. The record must have
// been meta-filtered and still have at least one source. When the branch the
// mode selects has no material, the other branch substitutes.
std::string sample_type_verbalization(const KBEntityRecord& record,
                                      const SamplingConfig& config, Rng& rng);

}  // namespace fewner

#endif  // FEWNER_SAMPLING_HPP
