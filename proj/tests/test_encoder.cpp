#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fewner/encoder.hpp"
#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

using namespace fewner;

namespace {

std::vector<std::uint64_t> sequence_ids(const TextEncoder& enc,
                                        const std::vector<std::string>& tokens) {
  std::vector<std::uint64_t> ids{0};
  for (const auto& tok : tokens)
    for (std::uint64_t id : enc.subword_ids(tok)) ids.push_back(id);
  return ids;
}

double projected_loss(const TextEncoder& enc, const std::vector<std::uint64_t>& ids,
                      const Eigen::MatrixXd& projection) {
  const Eigen::MatrixXd out = enc.forward(ids);
  return (out.array() * projection.array()).sum();
}

}  // namespace

TEST_CASE("encoder ids parse and print") {
  const EncoderSpec spec = EncoderSpec::parse("tiny-2x64");
  CHECK(spec.family == "tiny");
  CHECK(spec.layers == 2);
  CHECK(spec.hidden == 64);
  CHECK(spec.vocab == 2048);
  CHECK(spec.id() == "tiny-2x64");

  const EncoderSpec custom = EncoderSpec::parse("tiny-3x16-v512");
  CHECK(custom.layers == 3);
  CHECK(custom.hidden == 16);
  CHECK(custom.vocab == 512);
  CHECK(custom.id() == "tiny-3x16-v512");
}

TEST_CASE("encoder ids reject malformed strings") {
  CHECK_THROWS_AS(EncoderSpec::parse("tiny"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("tiny-64"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("tiny-ax64"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("tiny-2x64-vx"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("tiny-0x64"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("tiny-2x64-v4"), ValidationError);
  CHECK_THROWS_AS(EncoderSpec::parse("-2x64"), ValidationError);
}

TEST_CASE("make_encoder rejects unknown families") {
  CHECK_NOTHROW(make_encoder("tiny-1x8-v32", 7));
  CHECK_THROWS_WITH_AS(make_encoder("bert-12x768", 7),
                       doctest::Contains("unknown encoder family 'bert'"),
                       ValidationError);
}

TEST_CASE("subwords chunk tokens into runs of at most four code points") {
  const auto enc = make_encoder("tiny-1x8-v32", 1);
  CHECK(enc->subword_ids("beds").size() == 1);       // 4 code points, one chunk
  CHECK(enc->subword_ids("bed").size() == 1);
  CHECK(enc->subword_ids("bedside").size() == 2);    // 4 + 3
  CHECK(enc->subword_ids("universities").size() == 3);
  CHECK(enc->subword_ids("").size() == 1);           // degenerate, still one id
  // Multi-byte code points count as single points.
  CHECK(enc->subword_ids("日本語").size() == 1);
  CHECK(enc->subword_ids("日本語中国").size() == 2);
}

TEST_CASE("subword ids stay inside the hash vocabulary and off the start id") {
  const auto enc = make_encoder("tiny-1x8-v32", 1);
  for (const char* tok : {"a", "Washington", "123", "émigré", "日本語中国語料"}) {
    for (std::uint64_t id : enc->subword_ids(tok)) {
      CHECK(id >= 1);
      CHECK(id <= 32);
    }
  }
  CHECK(enc->subword_ids("Washington") == enc->subword_ids("Washington"));
}

TEST_CASE("equal tokens share subword ids across encoder instances") {
  const auto a = make_encoder("tiny-1x8-v32", 1);
  const auto b = make_encoder("tiny-2x16-v32", 99);
  CHECK(a->subword_ids("hospital") == b->subword_ids("hospital"));
}

TEST_CASE("forward produces one row per position and demands the start id") {
  const auto enc = make_encoder("tiny-2x8-v32", 5);
  const auto ids = sequence_ids(*enc, {"St", "Mary's", "Hospital"});
  REQUIRE(ids[0] == 0);
  TextEncoder::Trace trace;
  const Eigen::MatrixXd out = enc->forward(ids, &trace);
  CHECK(out.rows() == static_cast<Eigen::Index>(ids.size()));
  CHECK(out.cols() == 8);
  CHECK(trace.h.size() == 3);  // embeddings + two layers
  CHECK(trace.h.back() == out);
  CHECK(out.array().abs().maxCoeff() <= 1.0);  // tanh range

  CHECK_THROWS_AS(enc->forward({}), ValidationError);
  CHECK_THROWS_AS(enc->forward({7, 3}), ValidationError);
}

TEST_CASE("every output position depends on every input position") {
  // The mean-pool shift feeds each position, so changing the last subword
  // must move the first row too.
  const auto enc = make_encoder("tiny-1x8-v32", 5);
  const Eigen::MatrixXd base = enc->forward({0, 3, 9});
  const Eigen::MatrixXd bumped = enc->forward({0, 3, 10});
  CHECK((base.row(0) - bumped.row(0)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("same seed gives the same network, different seeds differ") {
  const auto a = make_encoder("tiny-2x8-v32", 11);
  const auto b = make_encoder("tiny-2x8-v32", 11);
  const auto c = make_encoder("tiny-2x8-v32", 12);
  CHECK(a->params_hash() == b->params_hash());
  CHECK(a->params_hash() != c->params_hash());
  const std::vector<std::uint64_t> ids{0, 5, 17, 5};
  CHECK(a->forward(ids) == b->forward(ids));
  CHECK(a->forward(ids) != c->forward(ids));
}

TEST_CASE("analytic gradients match central finite differences") {
  auto enc = make_encoder("tiny-2x6-v16", 3);
  // Repeated id 5 exercises gradient accumulation into a shared embedding row.
  const std::vector<std::uint64_t> ids{0, 5, 12, 5, 9};

  Rng rng(77);
  Eigen::MatrixXd projection(static_cast<Eigen::Index>(ids.size()), 6);
  for (Eigen::Index r = 0; r < projection.rows(); ++r)
    for (Eigen::Index c = 0; c < projection.cols(); ++c)
      projection(r, c) = rng.next_normal();

  enc->zero_grad();
  TextEncoder::Trace trace;
  enc->forward(ids, &trace);
  enc->backward(ids, trace, projection);

  const double eps = 1e-5;
  double worst = 0.0;
  const auto params = enc->parameters();
  const auto grads = enc->gradients();
  REQUIRE(params.size() == grads.size());
  for (std::size_t t = 0; t < params.size(); ++t) {
    Eigen::MatrixXd& p = *params[t];
    const Eigen::MatrixXd& g = *grads[t];
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const double saved = p(r, c);
        p(r, c) = saved + eps;
        const double hi = projected_loss(*enc, ids, projection);
        p(r, c) = saved - eps;
        const double lo = projected_loss(*enc, ids, projection);
        p(r, c) = saved;
        const double numeric = (hi - lo) / (2 * eps);
        worst = std::max(worst, std::abs(numeric - g(r, c)));
      }
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("backward accumulates until zero_grad") {
  auto enc = make_encoder("tiny-1x6-v16", 3);
  const std::vector<std::uint64_t> ids{0, 4, 8};
  TextEncoder::Trace trace;
  enc->forward(ids, &trace);
  const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(3, 6);

  enc->zero_grad();
  enc->backward(ids, trace, d);
  const Eigen::MatrixXd once = *enc->gradients()[1];
  enc->backward(ids, trace, d);
  CHECK((*enc->gradients()[1] - 2 * once).cwiseAbs().maxCoeff() < 1e-12);
  enc->zero_grad();
  CHECK(enc->gradients()[1]->isZero());
}

TEST_CASE("only embedding rows that appear in the input get gradient") {
  auto enc = make_encoder("tiny-1x6-v16", 3);
  const std::vector<std::uint64_t> ids{0, 4, 4};
  TextEncoder::Trace trace;
  enc->forward(ids, &trace);
  enc->zero_grad();
  enc->backward(ids, trace, Eigen::MatrixXd::Ones(3, 6));
  const Eigen::MatrixXd& g = *enc->gradients()[0];
  CHECK(g.row(4).cwiseAbs().sum() > 0.0);
  CHECK(g.row(0).cwiseAbs().sum() > 0.0);   // start embedding trains too
  CHECK(g.row(7).cwiseAbs().sum() == 0.0);  // absent from the input
}

TEST_CASE("save and load restore the exact network") {
  const auto enc = make_encoder("tiny-2x8-v32", 21);
  std::stringstream buf;
  enc->save(buf);
  const TextEncoder back = TextEncoder::load(buf);
  CHECK(back.spec().id() == "tiny-2x8-v32");
  CHECK(back.params_hash() == enc->params_hash());
  const std::vector<std::uint64_t> ids{0, 1, 31, 2};
  CHECK(back.forward(ids) == enc->forward(ids));
}

TEST_CASE("load rejects foreign and truncated files") {
  std::stringstream junk("definitely not weights");
  CHECK_THROWS_AS(TextEncoder::load(junk), RuntimeError);

  const auto enc = make_encoder("tiny-1x6-v16", 21);
  std::stringstream buf;
  enc->save(buf);
  const std::string whole = buf.str();
  std::stringstream cut(whole.substr(0, whole.size() / 2));
  CHECK_THROWS_AS(TextEncoder::load(cut), RuntimeError);
}

TEST_CASE("params_hash tracks parameter changes") {
  auto enc = make_encoder("tiny-1x6-v16", 21);
  const std::uint64_t before = enc->params_hash();
  (*enc->parameters()[1])(0, 0) += 1e-9;
  CHECK(enc->params_hash() != before);
}
