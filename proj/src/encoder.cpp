#include "fewner/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

namespace {

constexpr char kMagic[8] = {'F', 'N', 'W', 'T', 'e', '0', '0', '1'};
constexpr int kChunkCodepoints = 4;

std::uint64_t hash_doubles(std::uint64_t h, const Eigen::MatrixXd& m) {
  const double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const std::uint64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index want_rows,
                            Eigen::Index want_cols) {
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || static_cast<Eigen::Index>(rows) != want_rows ||
      static_cast<Eigen::Index>(cols) != want_cols)
    throw RuntimeError("encoder state file is truncated or shaped wrong");
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw RuntimeError("encoder state file is truncated");
  return m;
}

}  // namespace

EncoderSpec EncoderSpec::parse(const std::string& id) {
  const std::size_t dash = id.find('-');
  if (dash == std::string::npos || dash == 0)
    throw ValidationError("malformed encoder id '" + id +
                          "' (expected <family>-<layers>x<hidden>[-v<vocab>])");
  EncoderSpec spec;
  spec.family = id.substr(0, dash);
  std::string rest = id.substr(dash + 1);
  const std::size_t vpos = rest.find("-v");
  std::string dims = rest;
  if (vpos != std::string::npos) {
    dims = rest.substr(0, vpos);
    try {
      spec.vocab = std::stoi(rest.substr(vpos + 2));
    } catch (const std::exception&) {
      throw ValidationError("malformed vocab suffix in encoder id '" + id + "'");
    }
  }
  const std::size_t x = dims.find('x');
  if (x == std::string::npos)
    throw ValidationError("malformed encoder id '" + id +
                          "' (expected <family>-<layers>x<hidden>[-v<vocab>])");
  try {
    spec.layers = std::stoi(dims.substr(0, x));
    spec.hidden = std::stoi(dims.substr(x + 1));
  } catch (const std::exception&) {
    throw ValidationError("malformed dimensions in encoder id '" + id + "'");
  }
  if (spec.layers < 1 || spec.hidden < 1 || spec.vocab < 16)
    throw ValidationError("encoder id '" + id +
                          "' needs layers >= 1, hidden >= 1, vocab >= 16");
  return spec;
}

std::string EncoderSpec::id() const {
  std::string out = family + "-" + std::to_string(layers) + "x" + std::to_string(hidden);
  if (vocab != EncoderSpec{}.vocab) out += "-v" + std::to_string(vocab);
  return out;
}

TextEncoder::TextEncoder(const EncoderSpec& spec) : spec_(spec) {
  embeddings_.setZero(spec.vocab + 1, spec.hidden);
  for (int l = 0; l < spec.layers; ++l) {
    w_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, spec.hidden));
    u_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, spec.hidden));
    b_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, 1));
  }
  g_embeddings_.setZero(spec.vocab + 1, spec.hidden);
  for (int l = 0; l < spec.layers; ++l) {
    g_w_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, spec.hidden));
    g_u_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, spec.hidden));
    g_b_.emplace_back(Eigen::MatrixXd::Zero(spec.hidden, 1));
  }
}

TextEncoder::TextEncoder(const EncoderSpec& spec, std::uint64_t seed)
    : TextEncoder(spec) {
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.next_normal();
  };
  fill(embeddings_);
  for (int l = 0; l < spec.layers; ++l) {
    fill(w_[l]);
    fill(u_[l]);
    // biases start at zero
  }
}

std::vector<std::uint64_t> TextEncoder::subword_ids(const std::string& token) const {
  // Code point boundaries, then chunks of up to kChunkCodepoints.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < token.size(); ++i)
    if ((static_cast<unsigned char>(token[i]) & 0xC0) != 0x80) starts.push_back(i);
  starts.push_back(token.size());

  std::vector<std::uint64_t> ids;
  const std::size_t n_points = starts.size() - 1;
  for (std::size_t first = 0; first < n_points; first += kChunkCodepoints) {
    const std::size_t last = std::min(first + kChunkCodepoints, n_points);
    const std::string_view chunk(token.data() + starts[first],
                                 starts[last] - starts[first]);
    ids.push_back(1 + fnv1a64(chunk) % spec_.vocab);
  }
  if (ids.empty()) ids.push_back(1 + fnv1a64("") % spec_.vocab);
  return ids;
}

Eigen::MatrixXd TextEncoder::forward(const std::vector<std::uint64_t>& ids,
                                     Trace* trace) const {
  if (ids.empty() || ids[0] != 0)
    throw ValidationError("encoder input must start with the sequence-start id 0");
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd h(n, spec_.hidden);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ids[i] > static_cast<std::uint64_t>(spec_.vocab))
      throw ValidationError("subword id out of range");
    h.row(i) = embeddings_.row(static_cast<Eigen::Index>(ids[i]));
  }
  if (trace) {
    trace->h.clear();
    trace->h.push_back(h);
  }
  for (int l = 0; l < spec_.layers; ++l) {
    const Eigen::VectorXd c = h.colwise().mean().transpose();
    const Eigen::VectorXd shift = u_[l] * c + b_[l].col(0);
    Eigen::MatrixXd z = h * w_[l].transpose();
    z.rowwise() += shift.transpose();
    h = z.array().tanh().matrix();
    if (trace) trace->h.push_back(h);
  }
  return h;
}

void TextEncoder::backward(const std::vector<std::uint64_t>& ids, const Trace& trace,
                           const Eigen::MatrixXd& d_out) {
  if (trace.h.size() != static_cast<std::size_t>(spec_.layers) + 1)
    throw ValidationError("encoder trace does not match the layer count");
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  if (d_out.rows() != n || d_out.cols() != spec_.hidden)
    throw ValidationError("gradient shape does not match the encoder output");

  Eigen::MatrixXd d = d_out;
  for (int l = spec_.layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& h_in = trace.h[l];
    const Eigen::MatrixXd& h_out = trace.h[l + 1];
    const Eigen::MatrixXd dz =
        (d.array() * (1.0 - h_out.array().square())).matrix();
    const Eigen::VectorXd s = dz.colwise().sum().transpose();
    const Eigen::VectorXd c = h_in.colwise().mean().transpose();
    g_w_[l].noalias() += dz.transpose() * h_in;
    g_u_[l].noalias() += s * c.transpose();
    g_b_[l].col(0) += s;
    const Eigen::VectorXd dc = u_[l].transpose() * s;
    d = dz * w_[l];
    d.rowwise() += (dc / static_cast<double>(n)).transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i)
    g_embeddings_.row(static_cast<Eigen::Index>(ids[i])) += d.row(i);
}

std::vector<Eigen::MatrixXd*> TextEncoder::parameters() {
  std::vector<Eigen::MatrixXd*> params;
  params.push_back(&embeddings_);
  for (int l = 0; l < spec_.layers; ++l) {
    params.push_back(&w_[l]);
    params.push_back(&u_[l]);
    params.push_back(&b_[l]);
  }
  return params;
}

std::vector<Eigen::MatrixXd*> TextEncoder::gradients() {
  std::vector<Eigen::MatrixXd*> grads;
  grads.push_back(&g_embeddings_);
  for (int l = 0; l < spec_.layers; ++l) {
    grads.push_back(&g_w_[l]);
    grads.push_back(&g_u_[l]);
    grads.push_back(&g_b_[l]);
  }
  return grads;
}

void TextEncoder::zero_grad() {
  for (Eigen::MatrixXd* g : gradients()) g->setZero();
}

std::uint64_t TextEncoder::params_hash() const {
  std::uint64_t h = fnv1a64(spec_.id());
  h = hash_doubles(h, embeddings_);
  for (int l = 0; l < spec_.layers; ++l) {
    h = hash_doubles(h, w_[l]);
    h = hash_doubles(h, u_[l]);
    h = hash_doubles(h, b_[l]);
  }
  return h;
}

void TextEncoder::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  const std::string id = spec_.id();
  const std::uint64_t id_len = id.size();
  out.write(reinterpret_cast<const char*>(&id_len), sizeof id_len);
  out.write(id.data(), static_cast<std::streamsize>(id.size()));
  write_matrix(out, embeddings_);
  for (int l = 0; l < spec_.layers; ++l) {
    write_matrix(out, w_[l]);
    write_matrix(out, u_[l]);
    write_matrix(out, b_[l]);
  }
  if (!out) throw RuntimeError("failed to write encoder state");
}

TextEncoder TextEncoder::load(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, sizeof magic) != std::string(kMagic, sizeof kMagic))
    throw RuntimeError("not an encoder state file");
  std::uint64_t id_len = 0;
  in.read(reinterpret_cast<char*>(&id_len), sizeof id_len);
  if (!in || id_len > 256) throw RuntimeError("encoder state file is corrupt");
  std::string id(id_len, '\0');
  in.read(id.data(), static_cast<std::streamsize>(id_len));
  const EncoderSpec spec = EncoderSpec::parse(id);

  TextEncoder enc(spec);
  enc.embeddings_ = read_matrix(in, spec.vocab + 1, spec.hidden);
  for (int l = 0; l < spec.layers; ++l) {
    enc.w_[l] = read_matrix(in, spec.hidden, spec.hidden);
    enc.u_[l] = read_matrix(in, spec.hidden, spec.hidden);
    enc.b_[l] = read_matrix(in, spec.hidden, 1);
  }
  return enc;
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& id, std::uint64_t seed) {
  const EncoderSpec spec = EncoderSpec::parse(id);
  if (spec.family != "tiny")
    throw ValidationError("unknown encoder family '" + spec.family +
                          "'; only the built-in 'tiny' family is available");
  return std::make_unique<TextEncoder>(spec, seed);
}

}  // namespace fewner
