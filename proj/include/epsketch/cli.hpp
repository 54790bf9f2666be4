#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "epsketch/bench.hpp"
#include "epsketch/bipartite.hpp"
#include "epsketch/lb_witness.hpp"
#include "epsketch/points_io.hpp"
#include "epsketch/sketch.hpp"

namespace epsketch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct UsageError : Error {
  using Error::Error;
};

inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline const std::map<std::string, PointsFormat> kFormats{
    {"csv", PointsFormat::kCsv}, {"bin", PointsFormat::kBinary}};

inline PointSet load_points(const std::string& path, PointsFormat format, bool assume_unit_ball) {
  PointSet p = read_points(path, format);
  if (!assume_unit_ball) p.require_unit_ball(path);
  return p;
}

inline std::string points_suffix(PointsFormat f) {
  return f == PointsFormat::kBinary ? ".bin" : ".csv";
}

}  // namespace detail

/// Runs the command line `args` (args[0] is the program name). Exit codes:
/// 0 success (including negative experimental outcomes), 1 error, 2 usage.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Additive-error distance sketches, bipartite dimension reduction and "
               "lower-bound witnesses"};
  app.require_subcommand(1);

  std::string points_path, sketch_path, out_path, sweep_file, a_path, b_path;
  double eps = 0.1, c_const = 4.0, c_scale = 1.0, delta = 0.5;
  std::uint64_t seed = 0, n = 0, k = 0, query_i = 0, query_j = 0;
  std::size_t net_size = 128, threads = 1, attempts = 5;
  bool assume_unit_ball = false, no_timing = false;
  PointsFormat format = PointsFormat::kAuto;
  PointsFormat out_format = PointsFormat::kCsv;
  std::vector<std::uint64_t> sweep_n, sweep_k, sweep_seeds;
  std::vector<double> sweep_eps;

  auto* encode = app.add_subcommand("encode", "Encode a points file into a sketch file");
  encode->add_option("points", points_path, "Points file (CSV or binary)")->required();
  encode->add_option("--eps", eps, "Additive error target in (0, 0.5]")->required();
  encode->add_option("--seed", seed, "Random seed");
  encode->add_option("--out", out_path, "Output sketch file")->required();
  encode->add_option("--format", format, "Input format")
      ->transform(CLI::CheckedTransformer(detail::kFormats, CLI::ignore_case));
  encode->add_flag("--assume-unit-ball", assume_unit_ball, "Skip the unit-ball check on input");
  encode->add_option("--threads", threads, "Encoder threads");

  auto* query = app.add_subcommand("query", "Approximate inner product and squared distance");
  query->add_option("sketch", sketch_path, "Sketch file")->required();
  query->add_option("i", query_i, "First point index")->required();
  query->add_option("j", query_j, "Second point index")->required();

  auto* bench = app.add_subcommand("bench", "Encode/decode sweep emitting CSV");
  bench->add_option("--sweep-file", sweep_file, "JSON with arrays n, k, eps, seeds");
  bench->add_option("--n", sweep_n, "Point counts")->delimiter(',');
  bench->add_option("--k", sweep_k, "Dimensions")->delimiter(',');
  bench->add_option("--eps", sweep_eps, "Error targets")->delimiter(',');
  bench->add_option("--seeds", sweep_seeds, "Seeds")->delimiter(',');
  bench->add_option("--out", out_path, "Output CSV (default stdout)");
  bench->add_flag("--no-timing", no_timing, "Write wall_ms as 0 for reproducible output");

  auto* bip = app.add_subcommand("bipartite", "Reduce a_i, b_j to dimension t");
  bip->add_option("a", a_path, "Points file for a_i")->required();
  bip->add_option("b", b_path, "Points file for b_j")->required();
  bip->add_option("--eps", eps, "Additive error target in (0, 1)")->required();
  bip->add_option("--C", c_const, "Constant C in t = floor(C ln(2+eps^2 n)/eps^2)");
  bip->add_option("--c-scale", c_scale, "Slab half-width multiplier");
  bip->add_option("--max-attempts", attempts, "Random rotations to try");
  bip->add_option("--seed", seed, "Random seed");
  bip->add_option("--out", out_path, "Output prefix for <prefix>.x and <prefix>.y")->required();
  bip->add_option("--format", out_format, "Output points format")
      ->transform(CLI::CheckedTransformer(detail::kFormats, CLI::ignore_case));
  bip->add_flag("--assume-unit-ball", assume_unit_ball, "Skip the unit-ball check on input");

  auto* lb = app.add_subcommand("lowerbound", "Separated net and distinguishing set");
  lb->add_option("--k", k, "Dimension")->required();
  lb->add_option("--delta", delta, "Net separation in (0, 1)")->required();
  lb->add_option("--eps", eps, "Distinguishing margin")->required();
  lb->add_option("--n", n, "Point count; R has n/2 points")->required();
  lb->add_option("--net-size", net_size, "Target net size");
  lb->add_option("--seed", seed, "Random seed");

  auto* gen = app.add_subcommand("generate", "Write n points uniform in the unit ball");
  gen->add_option("--n", n, "Point count")->required();
  gen->add_option("--k", k, "Dimension")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out_path, "Output points file")->required();
  gen->add_option("--format", out_format, "Output format")
      ->transform(CLI::CheckedTransformer(detail::kFormats, CLI::ignore_case));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (encode->parsed()) {
      const PointSet x = detail::load_points(points_path, format, assume_unit_ball);
      SketchConfig cfg;
      cfg.threads = static_cast<unsigned>(threads);
      const SketchFile f = encode_set(x, eps, seed, cfg);
      f.save(out_path);
      out << "n=" << f.n << " k=" << f.k_original << " regime=" << to_string(f.regime)
          << " working_dim=" << f.working_dim << " bits_per_point=" << detail::fmt9(f.bits_per_point())
          << " total_bits=" << f.payload_bit_length << '\n';
    } else if (query->parsed()) {
      const SketchFile f = SketchFile::load(sketch_path);
      if (query_i == query_j) throw detail::UsageError("diagonal query not supported");
      if (query_i >= f.n || query_j >= f.n)
        throw detail::UsageError("index out of range: sketch holds " + std::to_string(f.n) +
                                 " points");
      const QueryResult r = decode_pair(f, query_i, query_j);
      out << "inner=" << detail::fmt9(r.inner) << " dist_sq=" << detail::fmt9(r.dist_sq) << '\n';
    } else if (bench->parsed()) {
      BenchSweep sweep{sweep_n, sweep_k, sweep_eps, sweep_seeds};
      if (!sweep_file.empty()) {
        std::ifstream in(sweep_file);
        if (!in) throw Error("cannot open " + sweep_file);
        const auto j = nlohmann::json::parse(in);
        sweep.n = j.at("n").get<std::vector<std::uint64_t>>();
        sweep.k = j.at("k").get<std::vector<std::uint64_t>>();
        sweep.eps = j.at("eps").get<std::vector<double>>();
        sweep.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
      }
      if (sweep.n.empty() || sweep.k.empty() || sweep.eps.empty())
        throw detail::UsageError("bench needs n, k and eps lists (flags or --sweep-file)");
      if (sweep.seeds.empty()) sweep.seeds = {0};
      const auto rows = run_bench(sweep, !no_timing);
      if (out_path.empty()) {
        write_bench_csv(out, rows);
      } else {
        std::ofstream file(out_path);
        if (!file) throw Error("cannot open " + out_path);
        write_bench_csv(file, rows);
      }
    } else if (bip->parsed()) {
      PointSet a = detail::load_points(a_path, PointsFormat::kAuto, assume_unit_ball);
      PointSet b = detail::load_points(b_path, PointsFormat::kAuto, assume_unit_ball);
      const auto inst = BipartiteInstance::make(std::move(a), std::move(b), eps, c_const, c_scale);
      ReductionOptions opts;
      opts.max_attempts = attempts;
      const ReductionResult res = reduce(inst, seed, opts);
      const std::string suffix = detail::points_suffix(out_format);
      write_points(out_path + ".x" + suffix, res.x, out_format);
      write_points(out_path + ".y" + suffix, res.y, out_format);
      std::size_t max_sweeps = 0;
      double max_norm = 0.0;
      for (auto s : res.sweeps) max_sweeps = std::max(max_sweeps, s);
      for (auto v : res.x_norms) max_norm = std::max(max_norm, v);
      out << "n=" << inst.a.dim() << " t=" << res.t
          << " achieved_eps=" << detail::fmt9(res.achieved_eps) << " attempts=" << res.attempts
          << " retries=" << res.attempts - 1 << " max_sweeps=" << max_sweeps
          << " max_x_norm=" << detail::fmt9(max_norm) << '\n';
    } else if (lb->parsed()) {
      RngStream net_rng(seed, stream_tag::kNet);
      SeparatedNet net;
      try {
        net = build_separated_net(k, delta, net_size, net_rng);
      } catch (const PatienceExhausted& e) {
        err << "error: " << e.what() << " (achieved size " << e.achieved() << ")\n";
        return kExitError;
      }
      RngStream r_rng(seed, stream_tag::kDistinguish);
      PointSet r = draw_R(k, n / 2, r_rng);
      const WitnessReport rep = verify_distinguishing(std::move(net), std::move(r), eps);
      out << "net_size=" << rep.net.points.size() << " r_size=" << rep.r.size()
          << " distinguished=" << (rep.distinguished ? "true" : "false")
          << " implied_bits=" << detail::fmt9(rep.implied_bits);
      if (rep.worst_pair)
        out << " worst_pair=" << rep.worst_pair->first << ',' << rep.worst_pair->second
            << " worst_separation=" << detail::fmt9(rep.worst_pair->separation);
      out << '\n';
    } else if (gen->parsed()) {
      write_points(out_path, random_ball_points(n, k, seed), out_format);
    }
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IndexError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace epsketch::cli
