// blocks selftest, blocks gradcheck.
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli/common.hpp"
#include "gazeforge/blocks/gradcheck.hpp"
#include "gazeforge/error.hpp"

namespace gazeforge::cli {

namespace {

using nlohmann::ordered_json;
namespace b = gazeforge::blocks;

inline constexpr double kGradTolerance = 1e-4;

struct BlocksArgs {
  std::optional<std::string> out;
  std::uint64_t seed = 0;
  int instances = 20;
};

void emit(const BlocksArgs& a, const Context& ctx, const std::string& command, const std::string& file,
          const ordered_json& report) {
  const std::string text = report.dump(2) + "\n";
  ctx.out << text;
  if (!a.out) return;
  Manifest manifest(command, ctx, *a.out);
  manifest.set_seed(a.seed);
  manifest.write(file, text);
  manifest.finish();
}

void selftest(const BlocksArgs& a, const Context& ctx) {
  std::mt19937_64 rng(a.seed);
  ordered_json checks = ordered_json::array();
  std::vector<std::string> failed;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    checks.push_back({{"check", name}, {"pass", ok}, {"detail", detail}});
    if (!ok) failed.push_back(name);
  };

  for (auto kind : {b::DecoderKind::attention, b::DecoderKind::scse}) {
    std::vector<b::DecoderBlockParams<double>> stack;
    stack.push_back(b::random_decoder_block(rng, kind, 4, 3, 3));
    stack.push_back(b::random_decoder_block(rng, kind, 3, 3, 3));
    stack.push_back(b::random_decoder_block(rng, kind, 3, 3, 2));
    const auto x = b::Tensor::uniform({1, 4, 8, 8}, rng);
    const auto y = b::decoder_forward<double>({x}, stack, kind);
    check(std::string("decoder_") + b::to_string(kind) + "_8_to_64", y.height() == 64 && y.width() == 64,
          b::dims_string(x.dims()) + " -> " + b::dims_string(y.dims()));
  }

  auto br = b::random_boundary_refinement(rng, 3);
  br.second.weight.values().setZero();
  br.second.bias.setZero();
  const auto x = b::Tensor::uniform({1, 3, 9, 7}, rng);
  const auto y = b::br_forward(x, br);
  check("boundary_refinement_zero_branch_identity", y.same_dims(x) && (y.values().array() == x.values().array()).all(),
        "bitwise comparison over " + std::to_string(x.size()) + " values");

  const auto conv = b::random_conv(rng, 2, 3, 3, 2, 1);
  const auto cy = b::conv2d(x, conv);
  check("conv2d_stride2_shape", cy.height() == 5 && cy.width() == 4, b::dims_string(cy.dims()));
  const auto up = b::deconv2d(b::Tensor::uniform({1, 3, 5, 4}, rng), b::random_deconv(rng, 3, 2));
  check("deconv2d_doubles", up.height() == 10 && up.width() == 8, b::dims_string(up.dims()));

  ordered_json report;
  report["command"] = "blocks selftest";
  report["seed"] = a.seed;
  report["checks"] = checks;
  report["pass"] = failed.empty();
  emit(a, ctx, "blocks selftest", "blocks_selftest.json", report);
  if (!failed.empty()) throw Error(ErrorCode::domain, "block self test failed", failed);
}

void gradcheck(const BlocksArgs& a, const Context& ctx) {
  if (a.instances < 1) throw Error(ErrorCode::validation, "--instances must be >= 1", {"instances"});
  const auto suite = b::gradcheck_suite(a.seed, a.instances);
  ordered_json rows = ordered_json::array();
  std::vector<std::string> failed;
  for (const auto& e : suite) {
    const bool ok = e.max_rel_error < kGradTolerance && e.checked > 0;
    rows.push_back({{"block", e.block},
                    {"instances", e.instances},
                    {"max_rel_error", e.max_rel_error},
                    {"checked", e.checked},
                    {"excluded", e.excluded},
                    {"pass", ok}});
    if (!ok) failed.push_back(e.block);
  }
  ordered_json report;
  report["command"] = "blocks gradcheck";
  report["seed"] = a.seed;
  report["step"] = b::kGradcheckStep;
  report["tolerance"] = kGradTolerance;
  report["blocks"] = rows;
  report["pass"] = failed.empty();
  emit(a, ctx, "blocks gradcheck", "blocks_gradcheck.json", report);
  if (!failed.empty()) throw Error(ErrorCode::domain, "gradient check failed", failed);
}

}  // namespace

void register_blocks(CLI::App& app, Registry& reg) {
  auto* blocks = app.add_subcommand("blocks", "network block references");
  blocks->require_subcommand(1);
  {
    auto& a = reg.make<BlocksArgs>();
    auto* sub = blocks->add_subcommand("selftest", "shape and identity contracts");
    sub->add_option("--out", a.out, "also write the report and a manifest here");
    sub->add_option("--seed", a.seed)->capture_default_str();
    reg.add(sub, [&a](const Context& ctx) { selftest(a, ctx); });
  }
  {
    auto& a = reg.make<BlocksArgs>();
    auto* sub = blocks->add_subcommand("gradcheck", "finite-difference input gradients of every block");
    sub->add_option("--out", a.out, "also write the report and a manifest here");
    sub->add_option("--seed", a.seed)->capture_default_str();
    sub->add_option("--instances", a.instances, "random instances per block")->capture_default_str();
    reg.add(sub, [&a](const Context& ctx) { gradcheck(a, ctx); });
  }
}

}  // namespace gazeforge::cli
