// Command-line harness for the Gimli fault-attack laboratory. Subcommands
// mirror the experiment pipeline: kat (cipher validation), ineff-rate and
// histogram (fault-model studies), collect (ineffective-fault campaigns),
// attack (key-parameter recovery from a trace file), depmap (dependency
// analysis of a target bit).
//
// Conventions: --round names the state the paper superscripts (the biased
// state before that round); the fault that biases it strikes one round
// earlier, at boundary round+1. All randomness is derived from --seed through
// per-trial counter streams, so any command rerun with the same flags is
// byte-identical, independent of --threads.
//
// Exit codes: 0 success, 1 experiment failure, 2 usage error.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gimli_sifa/attack.hpp>
#include <gimli_sifa/campaign.hpp>
#include <gimli_sifa/kat.hpp>
#include <gimli_sifa/layout.hpp>

using namespace gimli_sifa;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ConfigEcho {
  std::vector<std::pair<std::string, std::string>> kv;

  void add(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
  void add(const std::string& k, uint64_t v) { kv.emplace_back(k, std::to_string(v)); }
  void add(const std::string& k, int v) { kv.emplace_back(k, std::to_string(v)); }
  void add(const std::string& k, double v) { kv.emplace_back(k, fmt_double(v)); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : kv) os << "# " << k << "=" << v << "\n";
  }
};

// Output sink: --out file or stdout.
struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file.open(path, std::ios::binary);
      if (!file) throw UsageError("cannot open output file: " + path);
      os = &file;
    }
  }
  std::ostream& out() { return *os; }
};

Key parse_key_flag(const std::string& key_flag, uint64_t seed) {
  if (key_flag == "random") {
    SplitMix64 rng{splitmix64_mix(seed ^ 0x6b65795f726e64ull)};
    Key k;
    for (auto& w : k.w) w = rng.next_u32();
    return k;
  }
  return Key::from_hex(key_flag);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct TargetFlags {
  int round = 22;
  std::string row = "b";
  int col = 0;
  int offset = 0;
  unsigned width = 8;

  void add_options(CLI::App* app, bool with_width = true) {
    app->add_option("--round", round, "target state round (fault strikes at boundary round+1)");
    app->add_option("--row", row, "target row a|b|c")->check(CLI::IsMember({"a", "b", "c"}));
    app->add_option("--col", col, "target column 0..3")->check(CLI::Range(0, 3));
    app->add_option("--offset", offset, "first bit of the window 0..31")->check(CLI::Range(0, 31));
    if (with_width) app->add_option("--width", width, "window width in bits")->check(CLI::Range(1, 32));
  }

  FaultLocation location() const {
    FaultLocation loc;
    loc.boundary = round + 1;
    loc.row = row_from_char(row.at(0));
    loc.col = col;
    loc.bit_offset = offset;
    loc.width = width;
    loc.validate();
    return loc;
  }

  TraceTarget target() const {
    TraceTarget t;
    t.round = round;
    t.row = row_from_char(row.at(0));
    t.col = col;
    t.bit = offset;
    return t;
  }
};

// --- kat ---------------------------------------------------------------------

int cmd_kat(const std::string& path, SpBoxVariant variant) {
  auto vectors = read_kat_file(path);
  if (vectors.empty()) {
    std::cout << "warning: no vectors in " << path << "\n";
    std::cout << "0/0 vectors passed\n";
    return 0;
  }
  KatSummary sum = run_kat_vectors(vectors, variant);
  size_t fail_at = 0;
  for (const auto& kv : vectors) {
    bool failed = fail_at < sum.failures.size() && sum.failures[fail_at].count == kv.count;
    if (failed) {
      std::cout << "vector " << kv.count << ": FAIL (" << sum.failures[fail_at].what << ")\n";
      ++fail_at;
    } else {
      std::cout << "vector " << kv.count << ": pass\n";
    }
  }
  std::cout << sum.passed << "/" << sum.total << " vectors passed\n";
  return sum.all_passed() ? 0 : 1;
}

// --- ineff-rate ----------------------------------------------------------------

int cmd_ineff_rate(const std::string& models_csv, const std::string& widths_csv, uint64_t trials,
                   uint64_t seed, const TargetFlags& tf, SpBoxVariant variant,
                   const std::string& out_path) {
  Sink sink(out_path);
  Key key = parse_key_flag("random", seed);

  ConfigEcho cfg;
  cfg.add("cmd", std::string("ineff-rate"));
  cfg.add("models", models_csv);
  cfg.add("widths", widths_csv);
  cfg.add("trials", trials);
  cfg.add("seed", seed);
  cfg.add("round", tf.round);
  cfg.add("row", tf.row);
  cfg.add("col", tf.col);
  cfg.add("offset", tf.offset);
  cfg.add("spbox", std::string(to_string(variant)));
  cfg.add("key", to_hex(key.to_bytes()));
  cfg.write(sink.out());
  sink.out() << "model,w,analytic_rate,empirical_rate,trials\n";

  for (const std::string& mname : split_list(models_csv)) {
    FaultModel model = fault_model_from_string(mname);
    for (const std::string& wtok : split_list(widths_csv)) {
      unsigned w = static_cast<unsigned>(std::stoul(wtok));
      FaultSpec spec;
      spec.model = model;
      spec.location = tf.location();
      spec.location.width = w;
      spec.variant = variant;
      double analytic = analytic_ineffectiveness_rate(model, w);
      // An empirical estimate is meaningless when the trial budget cannot
      // produce a handful of ineffective events; the field stays absent.
      std::string empirical;
      if (analytic * static_cast<double>(trials) >= 10.0) {
        uint64_t hits = 0;
        for (uint64_t t = 0; t < trials; ++t) {
          SplitMix64 rng = trial_stream(seed, t);
          Nonce nonce = draw_nonce(rng);
          if (faulted_window_unchanged(key, nonce, spec, rng)) ++hits;
        }
        empirical = fmt_double(static_cast<double>(hits) / static_cast<double>(trials));
      }
      sink.out() << to_string(model) << "," << w << "," << fmt_double(analytic) << "," << empirical
                 << "," << trials << "\n";
    }
  }
  return 0;
}

// --- histogram -----------------------------------------------------------------

int cmd_histogram(const std::string& model_s, uint64_t trials, uint64_t seed, const TargetFlags& tf,
                  SpBoxVariant variant, const std::string& key_flag, const std::string& out_path) {
  Sink sink(out_path);
  Key key = parse_key_flag(key_flag, seed);
  FaultSpec spec{fault_model_from_string(model_s), tf.location(), variant};

  ConfigEcho cfg;
  cfg.add("cmd", std::string("histogram"));
  cfg.add("model", to_string(spec.model));
  cfg.add("width", static_cast<uint64_t>(spec.location.width));
  cfg.add("round", tf.round);
  cfg.add("row", tf.row);
  cfg.add("col", tf.col);
  cfg.add("offset", tf.offset);
  cfg.add("trials", trials);
  cfg.add("seed", seed);
  cfg.add("spbox", std::string(to_string(variant)));
  cfg.add("key", to_hex(key.to_bytes()));
  cfg.write(sink.out());

  HistogramPair h = intermediate_histogram(key, spec, trials, seed);
  sink.out() << "bin,count_nofault,count_ineffective\n";
  for (size_t b = 0; b < h.no_fault.size(); ++b)
    sink.out() << b << "," << h.no_fault[b] << "," << h.ineffective[b] << "\n";
  return 0;
}

// --- collect -------------------------------------------------------------------

int cmd_collect(const std::string& model_s, uint64_t target, uint64_t seed, const TargetFlags& tf,
                SpBoxVariant variant, const std::string& key_flag, uint64_t cap,
                const std::string& out_path) {
  if (out_path.empty()) throw UsageError("collect requires --out <trace-file>");
  Key key = parse_key_flag(key_flag, seed);
  FaultSpec spec{fault_model_from_string(model_s), tf.location(), variant};
  double analytic = analytic_ineffectiveness_rate(spec.model, spec.location.width);
  if (analytic <= 0.0)
    throw UsageError("model " + to_string(spec.model) + " admits no ineffective faults");

  TraceSet ts = collect_ineffective(key, spec, target, seed, cap);
  write_traceset(out_path, ts);
  std::cout << "collected " << ts.nonces.size() << "/" << target << " ineffective faults in "
            << ts.trials << " trials (empirical rate " << fmt_double(ts.empirical_rate())
            << ", analytic " << fmt_double(analytic) << ")\n";
  std::cout << "key " << to_hex(key.to_bytes()) << "\n";
  std::cout << "wrote " << out_path << "\n";
  if (!ts.complete) {
    std::cout << "trial cap " << cap << " exceeded; trace set is partial\n";
    return 1;
  }
  return 0;
}

// --- attack --------------------------------------------------------------------

int cmd_attack(const std::string& trace_path, const std::string& key_flag, uint64_t step,
               size_t top, unsigned threads, std::optional<TargetFlags> explicit_target,
               SpBoxVariant variant, const std::string& out_prefix) {
  TraceSet ts = read_traceset(trace_path);
  if (ts.nonces.empty()) throw UsageError("trace file has no nonces: " + trace_path);
  TraceTarget base = target_for_traceset(ts);
  if (explicit_target) {
    TraceTarget want = explicit_target->target();
    if (!(want == base) || explicit_target->width != ts.spec.location.width) {
      std::ostringstream os;
      os << "trace file targets " << base.name() << " w=" << ts.spec.location.width
         << " but flags request " << want.name() << " w=" << explicit_target->width;
      throw UsageError(os.str());
    }
  }
  if (base.round < 21)
    throw UsageError("hypothesis enumeration for targets before round " + std::to_string(base.round) +
                     " is refused; the parameter space is out of reach");

  ExprArena arena;
  auto window = target_window(arena, base, ts.spec.location.width, variant);

  AttackOptions opts;
  opts.ranking_rows = top;
  opts.threads = threads;

  ConfigEcho cfg;
  cfg.add("cmd", std::string("attack"));
  cfg.add("trace", trace_path);
  cfg.add("trace_meta", traceset_metadata_line(ts));
  cfg.add("n_ineff", static_cast<uint64_t>(ts.nonces.size()));
  cfg.add("target", base.name());
  cfg.add("step", step);
  cfg.add("top", static_cast<uint64_t>(top));
  cfg.add("spbox", std::string(to_string(variant)));
  cfg.add("key", key_flag.empty() ? std::string("none") : key_flag);

  AttackReport rep = attack(window, ts.nonces, opts);

  {
    Sink sink(out_prefix + ".ranking.csv");
    cfg.write(sink.out());
    sink.out() << "bit,hypothesis_index,sei,rank\n";
    for (const auto& bit : rep.bits) {
      for (size_t i = 0; i < bit.ranking.size(); ++i)
        sink.out() << bit.target.bit << "," << bit.ranking[i].hypothesis << ","
                   << fmt_double(bit.ranking[i].sei) << "," << i + 1 << "\n";
    }
  }

  std::optional<Key> key;
  if (!key_flag.empty() && key_flag != "none") key = Key::from_hex(key_flag);

  for (const auto& bit : rep.bits) {
    std::cout << "bit " << bit.target.bit << ": params=" << bit.parameter_count << " best="
              << bit.best << " sei=" << fmt_double(bit.best_sei) << " ties=" << bit.tie_count;
    if (key) {
      Hypothesis truth = induced_hypothesis(arena, window[bit.target.bit - base.bit].layout, *key);
      bool in_tie = false;
      for (Hypothesis h : bit.tie_set)
        if (h == truth) in_tie = true;
      std::cout << " truth=" << truth << " truth_in_tie=" << (in_tie ? 1 : 0) << " match_bits="
                << bit.parameter_count - std::popcount(bit.best ^ truth);
    }
    std::cout << "\n";
  }

  if (key) {
    {
      Sink sink(out_prefix + ".advantage.csv");
      cfg.write(sink.out());
      sink.out() << "n_used,bit,advantage_top,advantage_tie_best,tie_count\n";
      for (const auto& wb : window)
        for (const CurvePoint& p : attack_bit_curves(arena, wb, ts.nonces, *key, step))
          sink.out() << p.n_used << "," << p.bit << "," << p.advantage_top << ","
                     << p.advantage_tie_best << "," << p.tie_count << "\n";
    }
    {
      Sink sink(out_prefix + ".sei.csv");
      cfg.write(sink.out());
      sink.out() << "n_used,bit,sei_correct,sei_best_wrong\n";
      for (const auto& wb : window)
        for (const CurvePoint& p : attack_bit_curves(arena, wb, ts.nonces, *key, step))
          sink.out() << p.n_used << "," << p.bit << "," << fmt_double(p.sei_correct) << ","
                     << fmt_double(p.sei_best_wrong) << "\n";
    }
    std::cout << "wrote " << out_prefix << ".ranking.csv, .advantage.csv, .sei.csv\n";
  } else {
    std::cout << "wrote " << out_prefix << ".ranking.csv (pass --key for curves)\n";
  }
  return 0;
}

// --- depmap --------------------------------------------------------------------

int cmd_depmap(const TargetFlags& tf, SpBoxVariant variant, bool export_expr,
               const std::string& out_path) {
  Sink sink(out_path);
  TraceTarget t = tf.target();
  validate_target(t);

  ExprArena arena;
  SymbolicPermutation sym(arena, variant);
  const auto& state = sym.before_round(t.round);
  NodeId expr = state.word(t.row, t.col)[t.bit];
  HypothesisLayout lay = reduce_layout(arena, expr);

  sink.out() << "target " << t.name() << " (spbox " << to_string(variant) << ")\n";
  sink.out() << render_dependency_map(arena, expr);
  sink.out() << "n_keybits: " << lay.n_keybits() << "\n";
  sink.out() << "distinct key bits: " << lay.distinct_key_bits.size() << "\n";
  sink.out() << "expanded equation key-bit slots: "
             << arena.expanded_leaf_slots(expr, BitSource::key) << "\n";
  sink.out() << "unique bits (" << lay.unique_bits.size() << "):";
  for (const auto& b : lay.unique_bits) sink.out() << " " << b.name();
  sink.out() << "\n";
  sink.out() << "groups (" << lay.groups.size() << "):\n";
  for (size_t g = 0; g < lay.groups.size(); ++g) {
    sink.out() << "  sum" << g + 1 << ":";
    for (const auto& l : lay.groups[g].leaves) sink.out() << " " << l.name();
    sink.out() << "\n";
  }
  sink.out() << "parameter_count: " << lay.parameter_count() << "\n";
  if (lay.parameter_count() > max_enumeration_params)
    sink.out() << "hypothesis enumeration: refused (2^" << lay.parameter_count()
               << " parameter assignments)\n";
  else
    sink.out() << "hypothesis enumeration: 2^" << lay.parameter_count() << " assignments\n";
  if (export_expr) sink.out() << "expr: " << arena.render(expr) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gimli ineffective-fault attack laboratory"};
  app.require_subcommand(1);

  // kat
  auto* kat = app.add_subcommand("kat", "run known-answer vectors against the cipher");
  std::string kat_file;
  std::string kat_spbox = "official";
  kat->add_option("file", kat_file, "KAT file (Count/Key/Nonce/PT/AD/CT records)")->required();
  kat->add_option("--spbox", kat_spbox)->check(CLI::IsMember({"official", "paper"}));

  // ineff-rate
  auto* rate = app.add_subcommand("ineff-rate", "analytic and empirical ineffectiveness rates");
  std::string rate_models = "random-and,stuck-at-0,prob-bitflip";
  std::string rate_widths = "1,4,8,16,32";
  uint64_t rate_trials = 200000, rate_seed = 1;
  std::string rate_out, rate_spbox = "official";
  TargetFlags rate_tf;
  rate->add_option("--models", rate_models, "comma-separated fault models");
  rate->add_option("--widths", rate_widths, "comma-separated widths");
  rate->add_option("--trials", rate_trials, "trials per (model, width)");
  rate->add_option("--seed", rate_seed);
  rate->add_option("--out", rate_out, "output CSV (default stdout)");
  rate->add_option("--spbox", rate_spbox)->check(CLI::IsMember({"official", "paper"}));
  rate_tf.add_options(rate, false);

  // histogram
  auto* hist = app.add_subcommand("histogram", "intermediate-value histogram with/without fault");
  std::string hist_model = "prob-bitflip:2/3,1/3";
  uint64_t hist_trials = 100000, hist_seed = 1;
  std::string hist_out, hist_key = "random", hist_spbox = "official";
  TargetFlags hist_tf;
  hist->add_option("--model", hist_model);
  hist->add_option("--trials", hist_trials);
  hist->add_option("--seed", hist_seed);
  hist->add_option("--key", hist_key, "64 hex chars or 'random'");
  hist->add_option("--out", hist_out);
  hist->add_option("--spbox", hist_spbox)->check(CLI::IsMember({"official", "paper"}));
  hist_tf.add_options(hist);

  // collect
  auto* col = app.add_subcommand("collect", "collect nonces of ineffective faulted decryptions");
  std::string col_model = "prob-bitflip:2/3,1/3";
  uint64_t col_target = 180, col_seed = 1, col_cap = default_trial_cap;
  std::string col_out, col_key = "random", col_spbox = "official";
  TargetFlags col_tf;
  col->add_option("--model", col_model);
  col->add_option("--target", col_target, "ineffective faults to collect");
  col->add_option("--seed", col_seed);
  col->add_option("--key", col_key, "64 hex chars or 'random'");
  col->add_option("--cap", col_cap, "trial budget");
  col->add_option("--out", col_out, "trace file to write")->required();
  col->add_option("--spbox", col_spbox)->check(CLI::IsMember({"official", "paper"}));
  col_tf.add_options(col);

  // attack
  auto* atk = app.add_subcommand("attack", "rank key hypotheses against a trace file");
  std::string atk_trace, atk_key, atk_out = "attack", atk_spbox = "official";
  uint64_t atk_step = 20;
  size_t atk_top = 1024;
  unsigned atk_threads = 1;
  TargetFlags atk_tf;
  bool atk_tf_given = false;
  atk->add_option("trace", atk_trace, "trace file from collect")->required();
  atk->add_option("--key", atk_key, "true key (64 hex chars) to emit advantage/SEI curves");
  atk->add_option("--step", atk_step, "curve prefix step");
  atk->add_option("--top", atk_top, "ranking rows kept per bit");
  atk->add_option("--threads", atk_threads, "hypothesis enumeration threads");
  atk->add_option("--out", atk_out, "output file prefix");
  atk->add_option("--spbox", atk_spbox)->check(CLI::IsMember({"official", "paper"}));
  auto* atk_round = atk->add_option("--round", atk_tf.round, "cross-check against trace metadata");
  atk->add_option("--row", atk_tf.row)->check(CLI::IsMember({"a", "b", "c"}));
  atk->add_option("--col", atk_tf.col)->check(CLI::Range(0, 3));
  atk->add_option("--offset", atk_tf.offset)->check(CLI::Range(0, 31));
  atk->add_option("--width", atk_tf.width)->check(CLI::Range(1, 32));

  // depmap
  auto* dep = app.add_subcommand("depmap", "dependency map and hypothesis layout of a target bit");
  std::string dep_out, dep_spbox = "official";
  bool dep_expr = false;
  TargetFlags dep_tf;
  dep_tf.round = 22;
  dep_tf.offset = 7;
  dep->add_option("--out", dep_out);
  dep->add_option("--spbox", dep_spbox)->check(CLI::IsMember({"official", "paper"}));
  dep->add_flag("--export-expr", dep_expr, "append the expression in prefix notation");
  dep_tf.add_options(dep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*kat) return cmd_kat(kat_file, spbox_variant_from_string(kat_spbox));
    if (*rate)
      return cmd_ineff_rate(rate_models, rate_widths, rate_trials, rate_seed, rate_tf,
                            spbox_variant_from_string(rate_spbox), rate_out);
    if (*hist)
      return cmd_histogram(hist_model, hist_trials, hist_seed, hist_tf,
                           spbox_variant_from_string(hist_spbox), hist_key, hist_out);
    if (*col)
      return cmd_collect(col_model, col_target, col_seed, col_tf,
                         spbox_variant_from_string(col_spbox), col_key, col_cap, col_out);
    if (*atk) {
      atk_tf_given = atk_round->count() > 0;
      return cmd_attack(atk_trace, atk_key, atk_step, atk_top, atk_threads,
                        atk_tf_given ? std::optional<TargetFlags>(atk_tf) : std::nullopt,
                        spbox_variant_from_string(atk_spbox), atk_out);
    }
    if (*dep) return cmd_depmap(dep_tf, spbox_variant_from_string(dep_spbox), dep_expr, dep_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
