#ifndef FEWNER_ENCODER_HPP
#define FEWNER_ENCODER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace fewner {

// Encoder identifiers follow "<family>-<layers>x<hidden>[-v<vocab>]", e.g.
// "tiny-2x64" or "tiny-2x64-v1024". Only the self-contained "tiny" family
// ships; the identifier is the hook for plugging in other encoders.
struct EncoderSpec {
  std::string family = "tiny";
  int layers = 2;
  int hidden = 64;
  int vocab = 2048;  // hash buckets; subword id 0 is the sequence-start mark

  static EncoderSpec parse(const std::string& id);
  std::string id() const;
};

// A small trainable text encoder over hashed subwords.
//
// Tokens split into chunks of up to 4 code points; each chunk hashes into one
// of `vocab` embedding rows. A sequence is encoded as [start, subwords...]:
// embeddings pass through `layers` rounds of
//   h'_i = tanh(W h_i + U c + b),  c = mean_j h_j,
// so every output position, the start position included, depends on the whole
// sequence. All math is double precision to keep gradient checks tight.
class TextEncoder {
 public:
  struct Trace {
    std::vector<Eigen::MatrixXd> h;  // h[0] = embedding rows, h[l] = layer l output
  };

  TextEncoder(const EncoderSpec& spec, std::uint64_t seed);

  const EncoderSpec& spec() const { return spec_; }

  std::vector<std::uint64_t> subword_ids(const std::string& token) const;

  // `ids` must start with the sequence-start id 0. Rows align with ids.
  Eigen::MatrixXd forward(const std::vector<std::uint64_t>& ids,
                          Trace* trace = nullptr) const;

  // Accumulates parameter gradients for one forward pass. d_out has one row
  // per sequence position.
  void backward(const std::vector<std::uint64_t>& ids, const Trace& trace,
                const Eigen::MatrixXd& d_out);

  // Parameter tensors in a fixed order: embeddings, then W, U, b per layer.
  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<Eigen::MatrixXd*> gradients();
  void zero_grad();

  std::uint64_t params_hash() const;

  void save(std::ostream& out) const;
  static TextEncoder load(std::istream& in);

 private:
  explicit TextEncoder(const EncoderSpec& spec);

  EncoderSpec spec_;
  Eigen::MatrixXd embeddings_;         // (vocab + 1) x H
  std::vector<Eigen::MatrixXd> w_;     // H x H per layer
  std::vector<Eigen::MatrixXd> u_;     // H x H per layer
  std::vector<Eigen::MatrixXd> b_;     // H x 1 per layer
  Eigen::MatrixXd g_embeddings_;
  std::vector<Eigen::MatrixXd> g_w_, g_u_, g_b_;
};

// Builds an encoder from its identifier; unknown families are an error.
std::unique_ptr<TextEncoder> make_encoder(const std::string& id, std::uint64_t seed);

}  // namespace fewner

#endif  // FEWNER_ENCODER_HPP
