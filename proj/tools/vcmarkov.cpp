// Copyright 2026 The vcmarkov Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vcmarkov command-line tool.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vcmarkov/corpus.hpp"
#include "vcmarkov/csv.hpp"
#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"
#include "vcmarkov/pipeline.hpp"
#include "vcmarkov/probes.hpp"
#include "vcmarkov/resample.hpp"
#include "vcmarkov/rng.hpp"
#include "vcmarkov/scheme.hpp"
#include "vcmarkov/stats.hpp"

namespace {

using namespace vcmarkov;
namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDomain = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Options

struct Options {
  std::string command;
  std::vector<std::string> inputs;   // label=path
  std::vector<std::string> schemes;  // name, path, label=name or label=path
  std::vector<std::string> layouts;  // path or label=path
  std::string out_dir;
  std::string on_unknown = "skip";
  std::uint64_t seed = 20240601;
  std::size_t threads = 0;
  double level = 0.95;
  std::string cf = "complex";

  std::size_t block_len = 10'000;
  bool keep_partial = false;
  std::size_t min_partial = 1;

  std::size_t subblock_len = 250;
  std::size_t replicates = 1'000;

  std::string control_set = "block";
  std::vector<std::string> variables = default_correlation_variables();

  std::vector<std::string> statistics{"cf_simple", "cf_complex", "md", "eta", "nu", "p11", "q00"};

  std::size_t max_lag = 10;
  std::size_t lb_lags = 10;
  std::size_t band_lags = 5;
  std::vector<std::size_t> blocks;  // 1-based; empty = all

  std::size_t runs = 500;
  std::size_t sim_block = 1;

  std::string sources = "ru,it";
  std::string profile_csv;

  std::string analysis = "regress";
  std::size_t surrogates = 100;
  std::vector<std::string> replace{"ru"};

  std::vector<std::string> classes{"VVV", "CCC", "VVC", "CCV"};
  double threshold = 0.05;
  std::string md_trend = "auto";
  std::string annotations;
  std::string names;
  std::vector<std::string> probe_letters;
  std::vector<std::string> thematic;
  bool include_multiword = false;
  std::size_t min_token_len = 4;
};

CfKind cf_kind(const Options& o) {
  if (o.cf == "complex") return CfKind::Complex;
  if (o.cf == "simple") return CfKind::Simple;
  throw UsageError("--cf must be simple or complex");
}

MbbConfig mbb_config(const Options& o) {
  MbbConfig cfg{o.block_len, o.subblock_len, o.replicates, o.seed};
  cfg.validate();
  return cfg;
}

std::pair<std::string, std::string> split_label(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) return {"", s};
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Files and digests

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects output files in memory and commits them together: each file is
/// written to a temporary name and renamed into place; on failure every
/// file of the run is removed.
class OutputSet {
 public:
  explicit OutputSet(std::string manifest_hash) : hash_(std::move(manifest_hash)) {}

  const std::string& hash() const { return hash_; }

  std::ostream& csv(const std::string& name) {
    auto& os = streams_[name];
    os << "# manifest=" << hash_ << '\n';
    order_.push_back(name);
    return os;
  }

  void text(const std::string& name, const std::string& content) {
    streams_[name] << content;
    order_.push_back(name);
  }

  void json_file(const std::string& name, json j) {
    j["manifest"] = hash_;
    text(name, j.dump(2) + "\n");
  }

  std::vector<std::string> names() const { return order_; }

  std::string content(const std::string& name) const { return streams_.at(name).str(); }

  void commit(const fs::path& dir, const std::string& manifest_name, const json& manifest) {
    std::vector<fs::path> temps, finals;
    try {
      fs::create_directories(dir);
      const auto write_one = [&](const std::string& name, const std::string& data) {
        const fs::path final_path = dir / name;
        fs::create_directories(final_path.parent_path());
        fs::path tmp = final_path;
        tmp += ".tmp";
        temps.push_back(tmp);
        std::ofstream os(tmp, std::ios::binary);
        os << data;
        os.close();
        if (!os) throw DataError("cannot write '" + tmp.string() + "'");
      };
      for (const auto& n : order_) write_one(n, streams_.at(n).str());
      write_one(manifest_name, manifest.dump(2) + "\n");
      std::vector<std::string> all = order_;
      all.push_back(manifest_name);
      for (std::size_t i = 0; i < all.size(); ++i) {
        fs::rename(temps[i], dir / all[i]);
        finals.push_back(dir / all[i]);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : temps) fs::remove(p, ec);
      for (const auto& p : finals) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::string hash_;
  std::map<std::string, std::ostringstream> streams_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Sources

struct Source {
  std::string label;
  std::string path;
  std::string digest;
  EncodingScheme scheme;
  LayoutConfig layout;
  json scheme_json;
  json layout_json;
  Corpus corpus;
  SymbolSequence seq;
};

EncodingScheme resolve_scheme(const std::string& scheme_arg, json& as_json) {
  if (scheme_arg == "ru" || scheme_arg == "it") {
    as_json = scheme_arg;
    return builtin_scheme(scheme_arg);
  }
  const auto j = json::parse(read_file(scheme_arg));
  auto s = j.get<EncodingScheme>();
  as_json = s;
  return s;
}

std::vector<Source> load_sources(const Options& o) {
  if (o.inputs.empty()) throw UsageError("at least one --input label=path is required");
  std::map<std::string, std::string> scheme_of, layout_of;
  std::string scheme_all, layout_all;
  for (const auto& s : o.schemes) {
    auto [label, value] = split_label(s);
    (label.empty() ? scheme_all : scheme_of[label]) = value;
  }
  for (const auto& s : o.layouts) {
    auto [label, value] = split_label(s);
    (label.empty() ? layout_all : layout_of[label]) = value;
  }
  const EncodeOptions enc{o.on_unknown == "error" ? UnknownPolicy::Error
                                                  : UnknownPolicy::SkipAndLog,
                          {},
                          {}};
  if (o.on_unknown != "error" && o.on_unknown != "skip")
    throw UsageError("--on-unknown must be error or skip");

  std::vector<Source> out;
  std::set<std::string> seen;
  for (const auto& in : o.inputs) {
    auto [label, path] = split_label(in);
    if (label.empty()) throw UsageError("--input expects label=path, got '" + in + "'");
    if (!seen.insert(label).second) throw UsageError("duplicate input label '" + label + "'");
    Source src;
    src.label = label;
    src.path = path;
    std::string scheme_arg = scheme_of.count(label) ? scheme_of[label] : scheme_all;
    if (scheme_arg.empty()) {
      if (label != "ru" && label != "it")
        throw UsageError("no --scheme given for input '" + label + "'");
      scheme_arg = label;
    }
    src.scheme = resolve_scheme(scheme_arg, src.scheme_json);
    const std::string layout_path = layout_of.count(label) ? layout_of[label] : layout_all;
    if (!layout_path.empty()) {
      src.layout_json = json::parse(read_file(layout_path));
      src.layout = src.layout_json.get<LayoutConfig>();
    } else {
      src.layout_json = nullptr;
    }
    const std::string raw = read_file(path);
    src.digest = sha256_hex(raw);
    src.corpus = parse_corpus(raw, src.layout, src.scheme, label);
    src.seq = encode_text(src.corpus, src.scheme, enc);
    if (!src.seq.skipped.empty())
      std::cerr << "vcmarkov: " << label << ": skipped " << src.seq.skipped.size()
                << " unknown character(s), first " << describe_char(src.seq.skipped[0].ch)
                << " at byte " << src.seq.skipped[0].byte_offset << "\n";
    out.push_back(std::move(src));
  }
  return out;
}

const Source& find_source(const std::vector<Source>& sources, const std::string& label) {
  for (const auto& s : sources)
    if (s.label == label) return s;
  throw UsageError("no input labelled '" + label + "'");
}

BlockSegmentation segmentation(const Options& o, const SymbolSequence& seq) {
  return segment_blocks(seq, o.block_len, o.keep_partial, o.min_partial);
}

std::vector<std::size_t> selected_blocks(const Options& o, const BlockSegmentation& seg) {
  std::vector<std::size_t> out;
  if (o.blocks.empty()) {
    for (std::size_t b = 0; b < seg.blocks.size(); ++b) out.push_back(b);
    return out;
  }
  for (std::size_t b : o.blocks) {
    if (b < 1 || b > seg.blocks.size())
      throw DataError("block " + std::to_string(b) + " out of range (1.." +
                      std::to_string(seg.blocks.size()) + ")");
    out.push_back(b - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

void run_parse(const Options&, const std::vector<Source>& sources, OutputSet& out) {
  for (const auto& s : sources) {
    out.json_file(s.label + ".corpus.json", corpus_to_json(s.corpus));
    const auto st = line_statistics(s.corpus);
    csv::Writer w(out.csv(s.label + ".line_stats.csv"));
    w.row({"source_id", "n_lines", "mean_chars", "sd_chars", "mean_words", "sd_words"});
    w.field(s.label).field(st.n_lines).field(st.mean_chars).field(st.sd_chars);
    w.field(st.mean_words).field(st.sd_words).end();
  }
}

void run_encode(const Options&, const std::vector<Source>& sources, OutputSet& out) {
  for (const auto& s : sources) {
    out.text(s.label + ".vc.txt", to_vc_string(s.seq.view()) + "\n");
    auto& os = out.csv(s.label + ".origins.csv");
    write_origin_csv(os, s.seq);
    csv::Writer w(out.csv(s.label + ".skipped.csv"));
    w.row({"char", "codepoint", "byte_offset", "part", "stanza", "line"});
    for (const auto& sk : s.seq.skipped) {
      std::string ch;
      utf8::append(ch, sk.ch);
      w.field(ch).field(static_cast<std::uint32_t>(sk.ch)).field(sk.byte_offset);
      w.field(sk.part).field(sk.stanza).field(sk.line).end();
    }
  }
}

void run_profile(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  const auto which = cf_kind(o);
  const auto controls = control_set_from_string(o.control_set);
  csv::Writer w(out.csv("profile.csv"));
  std::vector<std::string> header{"source_id", "block", "start", "end", "length", "partial"};
  for (const auto& st : block_statistics()) header.push_back(st.name);
  w.row(header);
  std::vector<CorrelationRow> correlations;
  for (const auto& s : sources) {
    const auto rows = profile_blocks(s.seq, segmentation(o, s.seq), which);
    for (const auto& r : rows) {
      w.field(r.source_id).field(r.block).field(r.range.start).field(r.range.end);
      w.field(r.range.size()).field(r.partial);
      for (const auto& st : block_statistics()) w.field(st.get(r.model));
      w.end();
    }
    if (rows.size() >= 4) {
      const auto table = md_correlation_table(rows, o.variables, controls);
      correlations.insert(correlations.end(), table.begin(), table.end());
    } else {
      std::cerr << "vcmarkov: " << s.label << ": fewer than 4 blocks, no correlation table\n";
    }
  }
  csv::Writer c(out.csv("correlations.csv"));
  c.row({"source_id", "variable", "rho", "p_value", "method", "n", "controls"});
  for (const auto& r : correlations) {
    std::string ctrl;
    for (const auto& n : r.result.controlled_for) ctrl += (ctrl.empty() ? "" : ";") + n;
    c.field(r.source_id).field(r.variable).field(r.result.rho).field(r.result.p_value);
    c.field(r.result.method == PValueMethod::ExactPermutation ? "exact" : "t");
    c.field(r.result.n).field(ctrl.empty() ? "none" : ctrl).end();
  }
}

void run_bootstrap(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  const auto cfg = mbb_config(o);
  csv::Writer summary(out.csv("bootstrap.csv"));
  summary.row({"source_id", "block", "statistic", "estimate", "median", "iqr", "relative_spread",
               "ci_lo", "ci_hi", "level", "replicates"});
  csv::Writer reps(out.csv("bootstrap_replicates.csv"));
  std::vector<std::string> header{"source_id", "block", "replicate"};
  header.insert(header.end(), o.statistics.begin(), o.statistics.end());
  reps.row(header);
  for (const auto& s : sources) {
    const auto seg = segmentation(o, s.seq);
    for (std::size_t b : selected_blocks(o, seg)) {
      const auto& r = seg.blocks[b];
      const auto boot =
          bootstrap_block(s.seq.view(r.start, r.end), cfg, s.label, b, o.statistics, o.level, o.threads);
      for (const auto& st : boot.statistics) {
        summary.field(s.label).field(boot.block).field(st.name).field(st.estimate);
        summary.field(st.median).field(st.iqr).field(st.relative_spread());
        summary.field(st.interval.lo).field(st.interval.hi).field(o.level).field(cfg.n_replicates).end();
      }
      for (std::size_t k = 0; k < cfg.n_replicates; ++k) {
        reps.field(s.label).field(boot.block).field(k);
        for (const auto& st : boot.statistics) reps.field(st.replicates[k]);
        reps.end();
      }
    }
  }
}

void run_acf(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  MbbConfig cfg = mbb_config(o);
  csv::Writer w(out.csv("acf.csv"));
  w.row({"source_id", "block", "lag", "rho", "white_noise_lo", "white_noise_hi", "band_lo",
         "band_hi"});
  csv::Writer lb(out.csv("ljung_box.csv"));
  lb.row({"source_id", "block", "n", "h", "q", "p_value"});
  for (const auto& s : sources) {
    const auto seg = segmentation(o, s.seq);
    for (std::size_t b : selected_blocks(o, seg)) {
      const auto& r = seg.blocks[b];
      const auto rep = acf_report(s.seq.view(r.start, r.end), o.max_lag, o.lb_lags, o.band_lags,
                                  cfg, s.label, b, o.level, o.threads);
      for (const auto& row : rep.lags) {
        w.field(s.label).field(rep.block).field(row.lag).field(row.rho);
        w.field(-row.white_noise).field(row.white_noise);
        if (row.has_band)
          w.field(row.band.lo).field(row.band.hi);
        else
          w.field("").field("");
        w.end();
      }
      lb.field(s.label).field(rep.block).field(rep.n).field(rep.ljung_box.h);
      lb.field(rep.ljung_box.q).field(rep.ljung_box.p_value).end();
    }
  }
}

void run_simulate(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  csv::Writer runs(out.csv("simulate_runs.csv"));
  runs.row({"source_id", "block", "run", "simulated_md", "trigram_discrepancy"});
  csv::Writer summary(out.csv("simulate_summary.csv"));
  summary.row({"source_id", "block", "runs", "p11", "p10", "p01", "p00", "empirical_md",
               "md_median", "md_lo", "md_hi", "empirical_inside", "discrepancy_median",
               "discrepancy_lo", "discrepancy_hi", "level"});
  for (const auto& s : sources) {
    const auto seg = segmentation(o, s.seq);
    if (o.sim_block < 1 || o.sim_block > seg.blocks.size())
      throw DataError(s.label + ": block " + std::to_string(o.sim_block) + " does not exist");
    const auto& r = seg.blocks[o.sim_block - 1];
    const auto a = adequacy_ensemble(s.seq.view(r.start, r.end), o.runs, o.seed, s.label, o.level,
                                     o.threads);
    for (std::size_t k = 0; k < o.runs; ++k)
      runs.field(s.label).field(o.sim_block).field(k).field(a.simulated_md[k]).field(a.discrepancy[k]).end();
    summary.field(s.label).field(o.sim_block).field(o.runs);
    summary.field(a.model.p11).field(a.model.p10).field(a.model.p01).field(a.model.p00);
    summary.field(a.empirical_md).field(a.md_median).field(a.md_interval.lo).field(a.md_interval.hi);
    summary.field(a.empirical_inside).field(a.discrepancy_median);
    summary.field(a.discrepancy_interval.lo).field(a.discrepancy_interval.hi).field(o.level).end();
  }
}

RegressionSpec regression_spec(const Options& o) {
  const auto parts = split_list(o.sources);
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty() || parts[0] == parts[1])
    throw UsageError("--sources expects treatment,baseline (two distinct labels)");
  return {parts[1], parts[0]};
}

std::vector<MdObservation> observations_from_profile(const std::string& path) {
  const csv::Table t(csv::parse(read_file(path)), path);
  const auto c_src = t.column("source_id"), c_block = t.column("block"), c_md = t.column("md");
  std::vector<MdObservation> rows;
  for (const auto& row : t.rows()) {
    try {
      rows.push_back({std::stod(t.at(row, c_md)), std::stod(t.at(row, c_block)), t.at(row, c_src)});
    } catch (const std::logic_error&) {
      throw DataError(path + ": non-numeric block or md value");
    }
  }
  return rows;
}

json regression_json(const RegressionFit& fit, const std::vector<MdObservation>& rows,
                     const RegressionSpec& model, double level) {
  json coef, summary;
  for (std::size_t j = 0; j < 4; ++j) {
    coef[kCoefficientNames[j]] = fit.coefficients[j];
    if (!fit.replicates.empty())
      summary[kCoefficientNames[j]] = {{"mean", fit.summary[j].mean},
                                       {"ci_lo", fit.summary[j].interval.lo},
                                       {"ci_hi", fit.summary[j].interval.hi},
                                       {"level", level}};
  }
  json obs = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i)
    obs.push_back({{"source_id", rows[i].source},
                   {"block", rows[i].block},
                   {"md", rows[i].md},
                   {"residual", fit.residuals[i]}});
  return {{"model", "md ~ block * source"},
          {"baseline", model.baseline},
          {"treatment", model.treatment},
          {"coefficients", coef},
          {"r_squared", fit.r_squared},
          {"replicates", fit.replicates.size()},
          {"bootstrap", summary.is_null() ? json::object() : summary},
          {"observations", obs}};
}

RegressionFit fit_regression(const Options& o, const std::vector<Source>& sources,
                             std::vector<MdObservation>& rows) {
  const auto model = regression_spec(o);
  const auto cfg = mbb_config(o);
  std::vector<SourceBlocks> blocks;
  for (const auto& label : {model.treatment, model.baseline}) {
    const auto& s = find_source(sources, label);
    blocks.push_back({s.label, s.seq.view(), segmentation(o, s.seq).blocks});
  }
  rows.clear();
  for (const auto& b : blocks) {
    auto r = block_md_series(b);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return bootstrap_model_coefficients(blocks, model, cfg, o.level, o.threads);
}

void run_regress(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  const auto model = regression_spec(o);
  std::vector<MdObservation> rows;
  RegressionFit fit;
  if (!o.profile_csv.empty()) {
    rows = observations_from_profile(o.profile_csv);
    fit = fit_interaction_model(rows, model);
  } else {
    fit = fit_regression(o, sources, rows);
  }
  out.json_file("regression.json", regression_json(fit, rows, model, o.level));
  csv::Writer w(out.csv("regression_replicates.csv"));
  w.row({"replicate", "intercept", "block", "source", "block:source"});
  for (std::size_t r = 0; r < fit.replicates.size(); ++r) {
    w.field(r);
    for (double v : fit.replicates[r]) w.field(v);
    w.end();
  }
}

AnnotationTable load_annotations(const std::string& path, CategoryTable& categories) {
  const csv::Table t(csv::parse(read_file(path)), path);
  const auto c_ctx = t.column("context"), c_lemma = t.column("lemma");
  const bool has_cat = t.has_column("category");
  const auto c_cat = has_cat ? t.column("category") : 0;
  AnnotationTable ann;
  for (const auto& row : t.rows()) {
    ann.add(t.at(row, c_ctx), t.at(row, c_lemma));
    if (has_cat && !t.at(row, c_cat).empty()) categories.add(t.at(row, c_lemma), t.at(row, c_cat));
  }
  return ann;
}

std::vector<NameForms> load_names(const std::string& path) {
  const csv::Table t(csv::parse(read_file(path)), path);
  const auto c_char = t.column("character"), c_form = t.column("form");
  std::map<std::string, NameForms> by_char;
  for (const auto& row : t.rows()) {
    auto& nf = by_char[t.at(row, c_char)];
    nf.character = t.at(row, c_char);
    nf.forms.insert(utf8::fold_case(t.at(row, c_form)));
  }
  std::vector<NameForms> out;
  for (auto& [_, nf] : by_char) out.push_back(std::move(nf));
  return out;
}

Direction md_direction(const Options& o, const SymbolSequence& seq, const BlockSegmentation& seg) {
  if (o.md_trend == "increasing") return Direction::Increasing;
  if (o.md_trend == "decreasing") return Direction::Decreasing;
  if (o.md_trend != "auto") throw UsageError("--md-trend must be auto, increasing or decreasing");
  const auto rows = profile_blocks(seq, seg, cf_kind(o));
  std::vector<double> index, md;
  for (const auto& r : rows) {
    index.push_back(static_cast<double>(r.block));
    md.push_back(r.model.report.md);
  }
  return spearman_test(index, md).rho > 0 ? Direction::Increasing : Direction::Decreasing;
}

void run_probe(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  std::set<unsigned> classes;
  for (const auto& c : o.classes) classes.insert(vc_class_code(c));
  CategoryTable categories;
  std::optional<AnnotationTable> annotations;
  if (!o.annotations.empty()) annotations = load_annotations(o.annotations, categories);
  std::vector<NameForms> names;
  if (!o.names.empty()) names = load_names(o.names);

  for (const auto& s : sources) {
    const auto seg = segmentation(o, s.seq);
    const auto matches = scan_pattern_class(s.seq, classes, o.block_len);
    const auto block_of = [&](std::size_t pos) -> std::optional<std::size_t> {
      for (std::size_t b = 0; b < seg.blocks.size(); ++b)
        if (pos >= seg.blocks[b].start && pos < seg.blocks[b].end) return b + 1;
      return std::nullopt;
    };

    {
      std::array<std::size_t, 8> by_class{};
      for (const auto& m : matches) ++by_class[m.vc_class];
      csv::Writer w(out.csv(s.label + ".probe_classes.csv"));
      w.row({"source_id", "class", "pattern", "count"});
      for (unsigned c : classes)
        w.field(s.label).field(vc_class_name(c)).field(to_string(pattern_kind(c))).field(by_class[c]).end();
    }
    {
      csv::Writer w(out.csv(s.label + ".probe_matches.csv"));
      w.row({"position", "letters", "class", "context", "part", "stanza", "line", "single_word",
             "block"});
      for (const auto& m : matches) {
        w.field(m.position).field(m.letters).field(vc_class_name(m.vc_class)).field(m.context);
        w.field(m.part).field(m.stanza).field(m.line).field(m.single_word);
        if (auto b = block_of(m.position))
          w.field(*b);
        else
          w.field("");
        w.end();
      }
    }
    {
      csv::Writer w(out.csv(s.label + ".probe_ranking.csv"));
      w.row({"zipf_rank", "letters", "class", "count", "share"});
      for (const auto& r : rank_letter_trigrams(matches))
        w.field(r.zipf_rank).field(r.letters).field(vc_class_name(r.vc_class)).field(r.count).field(r.share).end();
    }
    {
      const auto tokens = extract_latin_tokens(s.corpus, o.min_token_len);
      csv::Writer w(out.csv(s.label + ".latin_tokens.csv"));
      w.row({"token", "part", "stanza", "line"});
      for (const auto& t : tokens.tokens) w.field(t.token).field(t.part).field(t.stanza).field(t.line).end();
      csv::Writer d(out.csv(s.label + ".latin_density.csv"));
      d.row({"part", "tokens", "words", "per_thousand_words"});
      for (const auto& p : tokens.densities)
        d.field(p.part).field(p.tokens).field(p.words).field(p.per_thousand_words).end();
    }

    if (seg.blocks.size() < 3) {
      std::cerr << "vcmarkov: " << s.label
                << ": fewer than 3 blocks, trend and category tables skipped\n";
      continue;
    }
    TrendOptions topts;
    topts.threshold = o.threshold;
    topts.md_trend = md_direction(o, s.seq, seg);
    {
      csv::Writer w(out.csv(s.label + ".probe_trends.csv"));
      w.row({"letters", "class", "pattern", "direction", "rho", "spearman_p", "count", "zipf_rank",
             "share", "matches_md_trend"});
      for (const auto& c : trigram_trend_table(matches, seg, topts)) {
        w.field(c.letters).field(vc_class_name(c.vc_class)).field(to_string(c.pattern));
        w.field(to_string(c.direction)).field(c.rho).field(c.spearman_p).field(c.count);
        w.field(c.zipf_rank).field(c.share).field(c.matches_md_trend ? "yes" : "no").end();
      }
    }

    if (!annotations) continue;
    const std::set<std::string> letters(o.probe_letters.begin(), o.probe_letters.end());
    std::vector<ProbeMatch> probe;
    for (const auto& m : matches)
      if ((letters.empty() || letters.count(m.letters)) && (o.include_multiword || m.single_word))
        probe.push_back(m);
    const auto report = categorize_matches(probe, *annotations, categories, seg);
    {
      csv::Writer w(out.csv(s.label + ".categories.csv"));
      w.row({"category", "members", "n", "rho", "spearman_p", "method"});
      for (const auto& t : report.trends) {
        std::string members;
        for (const auto& m : t.members) members += (members.empty() ? "" : ";") + m;
        w.field(t.name).field(members).field(t.n);
        if (t.trend)
          w.field(t.trend->rho).field(t.trend->p_value)
              .field(t.trend->method == PValueMethod::ExactPermutation ? "exact" : "t");
        else
          w.field("").field("").field("constant");
        w.end();
      }
      csv::Writer m(out.csv(s.label + ".categorized_matches.csv"));
      m.row({"position", "letters", "context", "lemma", "category", "part", "stanza", "line"});
      for (const auto& cm : report.matches)
        m.field(cm.match.position).field(cm.match.letters).field(cm.match.context).field(cm.lemma)
            .field(cm.category).field(cm.match.part).field(cm.match.stanza).field(cm.match.line).end();
    }
    if (names.empty()) continue;
    std::set<std::string> thematic(o.thematic.begin(), o.thematic.end());
    if (thematic.empty()) thematic = categories.labels();
    const auto co = name_cooccurrence(probe, report.matches, thematic, s.corpus, names);
    json stanzas = json::array();
    for (const auto& st : co.stanzas)
      stanzas.push_back({{"part", st.stanza.part},
                         {"stanza", st.stanza.stanza},
                         {"name_mentions", st.name_mentions},
                         {"probe_matches", st.probe_matches},
                         {"thematic_forms", st.thematic_forms}});
    json corr = nullptr;
    if (co.correlation)
      corr = {{"rho", co.correlation->rho},
              {"p_value", co.correlation->p_value},
              {"n", co.correlation->n},
              {"unit", co.correlation_unit}};
    out.json_file(s.label + ".cooccurrence.json",
                  {{"source_id", s.label},
                   {"thematic_categories", thematic},
                   {"total_mentions", co.total_mentions},
                   {"mentions_in_probe_stanzas", co.mentions_in_probe_stanzas},
                   {"mention_share_with_probe", co.mention_share_with_probe},
                   {"probe_stanzas", co.probe_stanzas},
                   {"probe_stanzas_with_theme", co.probe_stanzas_with_theme},
                   {"probe_stanza_theme_share", co.probe_stanza_theme_share},
                   {"correlation", corr},
                   {"correlation_status", co.correlation ? "computed" : "not computable"},
                   {"stanzas", stanzas}});
  }
}

using Runner = void (*)(const Options&, const std::vector<Source>&, OutputSet&);

Runner runner_for(const std::string& name) {
  if (name == "parse") return run_parse;
  if (name == "encode") return run_encode;
  if (name == "profile") return run_profile;
  if (name == "bootstrap") return run_bootstrap;
  if (name == "acf") return run_acf;
  if (name == "simulate") return run_simulate;
  if (name == "regress") return run_regress;
  if (name == "probe") return run_probe;
  return nullptr;
}

/// Runs an analysis on `--surrogates` shuffled copies of the sources named
/// in `--replace`; other sources are left intact.
void run_surrogate(const Options& o, const std::vector<Source>& sources, OutputSet& out) {
  if (o.analysis == "probe" || o.analysis == "parse" || o.analysis == "encode" ||
      !runner_for(o.analysis))
    throw UsageError("--analysis must be one of profile, bootstrap, acf, simulate, regress");
  for (const auto& r : o.replace) find_source(sources, r);
  const Runner inner = runner_for(o.analysis);
  csv::Writer w(out.csv("surrogate_summary.csv"));
  const bool regress = o.analysis == "regress";
  if (regress)
    w.row({"run", "interaction", "ci_lo", "ci_hi", "contains_zero"});
  else
    w.row({"run", "directory"});
  for (std::size_t run = 1; run <= o.surrogates; ++run) {
    std::vector<Source> shuffled;
    for (const auto& s : sources) {
      Source copy;
      copy.label = s.label;
      copy.scheme = s.scheme;
      copy.corpus = s.corpus;
      if (std::find(o.replace.begin(), o.replace.end(), s.label) != o.replace.end()) {
        const auto seed = derive_seed(o.seed, {stream::kSurrogate, fnv1a64(s.label), run});
        copy.seq = make_surrogate(s.seq.view(), o.subblock_len, seed, s.label);
      } else {
        copy.seq = s.seq;
        copy.seq.origins.clear();
      }
      shuffled.push_back(std::move(copy));
    }
    char dir[32];
    std::snprintf(dir, sizeof dir, "surrogate_%03zu", run);
    OutputSet inner_out(out.hash());
    inner(o, shuffled, inner_out);
    for (const auto& name : inner_out.names())
      out.text(std::string(dir) + "/" + name, inner_out.content(name));
    if (regress) {
      std::vector<MdObservation> rows;
      const auto fit = fit_regression(o, shuffled, rows);
      const auto& ci = fit.summary[3].interval;
      w.field(run).field(fit.coefficients[3]).field(ci.lo).field(ci.hi);
      w.field(ci.lo <= 0 && ci.hi >= 0).end();
    } else {
      w.field(run).field(dir).end();
    }
  }
}

// ---------------------------------------------------------------------------
// Manifest

json config_json(const Options& o, const std::vector<Source>& sources) {
  json inputs = json::array();
  for (const auto& s : sources)
    inputs.push_back({{"label", s.label},
                      {"sha256", s.digest},
                      {"scheme", s.scheme_json},
                      {"layout", s.layout_json}});
  const auto digest_of = [](const std::string& path) -> json {
    if (path.empty()) return nullptr;
    return sha256_hex(read_file(path));
  };
  return {{"command", o.command},
          {"inputs", inputs},
          {"on_unknown", o.on_unknown},
          {"seed", o.seed},
          {"level", o.level},
          {"cf", o.cf},
          {"block_len", o.block_len},
          {"keep_partial", o.keep_partial},
          {"min_partial", o.min_partial},
          {"subblock_len", o.subblock_len},
          {"replicates", o.replicates},
          {"control_set", o.control_set},
          {"variables", o.variables},
          {"statistics", o.statistics},
          {"max_lag", o.max_lag},
          {"lb_lags", o.lb_lags},
          {"band_lags", o.band_lags},
          {"blocks", o.blocks},
          {"runs", o.runs},
          {"sim_block", o.sim_block},
          {"sources", o.sources},
          {"profile_sha256", digest_of(o.profile_csv)},
          {"analysis", o.analysis},
          {"surrogates", o.surrogates},
          {"replace", o.replace},
          {"classes", o.classes},
          {"threshold", o.threshold},
          {"md_trend", o.md_trend},
          {"annotations_sha256", digest_of(o.annotations)},
          {"names_sha256", digest_of(o.names)},
          {"probe_letters", o.probe_letters},
          {"thematic", o.thematic},
          {"include_multiword", o.include_multiword},
          {"min_token_len", o.min_token_len}};
}

json seeds_json(const Options& o) {
  return {{"master", o.seed},
          {"rule", "mt19937_64 seeded with derive_seed(master, {stream, fnv1a64(source), block, "
                   "replicate})"},
          {"streams",
           {{"simulation", stream::kSimulation},
            {"mbb", stream::kMbb},
            {"surrogate", stream::kSurrogate},
            {"model_draw", stream::kModelDraw}}}};
}

int run(const Options& o) {
  std::vector<Source> sources;
  const bool from_profile = o.command == "regress" && !o.profile_csv.empty() && o.inputs.empty();
  if (!from_profile) sources = load_sources(o);
  const json config = config_json(o, sources);
  const std::string hash = sha256_hex(config.dump());
  OutputSet out(hash);
  if (o.command == "surrogate")
    run_surrogate(o, sources, out);
  else
    runner_for(o.command)(o, sources, out);

  json outputs = json::array();
  for (const auto& name : out.names())
    outputs.push_back({{"file", name}, {"sha256", sha256_hex(out.content(name))}});
  json inputs = json::array();
  json schemes = json::object();
  for (const auto& s : sources) {
    inputs.push_back({{"label", s.label}, {"path", s.path}, {"sha256", s.digest}});
    schemes[s.label] = s.scheme.name;
  }
  const json manifest{{"tool", "vcmarkov"},
                      {"version", VCMARKOV_VERSION},
                      {"command", o.command},
                      {"config_hash", hash},
                      {"config", config},
                      {"seeds", seeds_json(o)},
                      {"schemes", schemes},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"timestamp", utc_timestamp()}};
  std::string dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("VCMARKOV_OUTPUT_DIR");
    dir = env && *env ? env : ".";
  }
  out.commit(dir, "manifest.json", manifest);
  return 0;
}

int report_error(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump()
            << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// Argument parsing

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.inputs, "Input text as label=path (repeatable)");
  sub->add_option("--scheme", o.schemes,
                  "Encoding scheme: ru, it or a JSON file, optionally label=... (default: the "
                  "input label)");
  sub->add_option("--layout", o.layouts, "Layout JSON, optionally label=path");
  sub->add_option("--out", o.out_dir, "Output directory (default: $VCMARKOV_OUTPUT_DIR or .)");
  sub->add_option("--on-unknown", o.on_unknown, "Unknown characters: skip (logged) or error")
      ->check(CLI::IsMember({"skip", "error"}));
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  sub->add_option("--level", o.level, "Interval level")->check(CLI::Range(0.5, 0.9999));
  sub->add_option("--cf", o.cf, "Correction factor used for MD")
      ->check(CLI::IsMember({"simple", "complex"}));
}

void add_blocks(CLI::App* sub, Options& o) {
  sub->add_option("--block-len", o.block_len, "Block length in symbols")->check(CLI::PositiveNumber);
  sub->add_flag("--keep-partial", o.keep_partial, "Keep a shorter final block");
  sub->add_option("--min-partial", o.min_partial, "Minimum length of a kept partial block");
}

void add_mbb(CLI::App* sub, Options& o) {
  sub->add_option("--subblock-len", o.subblock_len, "MBB subblock length")->check(CLI::PositiveNumber);
  sub->add_option("--replicates", o.replicates, "Bootstrap replicates");
}

void add_profile(CLI::App* sub, Options& o) {
  sub->add_option("--control-set", o.control_set, "Controls for the correlation table")
      ->check(CLI::IsMember({"none", "block"}));
  sub->add_option("--variables", o.variables, "Variables correlated with MD")->delimiter(',');
}

void add_bootstrap(CLI::App* sub, Options& o) {
  sub->add_option("--stats", o.statistics, "Block statistics to bootstrap")->delimiter(',');
}

void add_acf(CLI::App* sub, Options& o) {
  sub->add_option("--max-lag", o.max_lag, "Largest ACF lag");
  sub->add_option("--lb-lags", o.lb_lags, "Ljung-Box lags");
  sub->add_option("--band-lags", o.band_lags, "Lags with bootstrap bands");
}

void add_block_selection(CLI::App* sub, Options& o) {
  sub->add_option("--blocks", o.blocks, "1-based blocks to analyze (default: all)")->delimiter(',');
}

void add_simulate(CLI::App* sub, Options& o) {
  sub->add_option("--runs", o.runs, "Simulated sequences")->check(CLI::PositiveNumber);
  sub->add_option("--block", o.sim_block, "1-based block the chain is fitted to");
}

void add_regress(CLI::App* sub, Options& o) {
  sub->add_option("--sources", o.sources, "treatment,baseline");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Markov vowel/consonant analysis of aligned verse corpora", "vcmarkov"};
  app.set_version_flag("--version", VCMARKOV_VERSION);
  app.require_subcommand(1);

  auto* parse = app.add_subcommand("parse", "Corpus JSON and line statistics");
  add_common(parse, o);

  auto* encode = app.add_subcommand("encode", "V/C text and origin map");
  add_common(encode, o);

  auto* profile = app.add_subcommand("profile", "Per-block model parameters and MD correlations");
  add_common(profile, o);
  add_blocks(profile, o);
  add_profile(profile, o);

  auto* bootstrap = app.add_subcommand("bootstrap", "MBB replicate statistics and intervals");
  add_common(bootstrap, o);
  add_blocks(bootstrap, o);
  add_mbb(bootstrap, o);
  add_bootstrap(bootstrap, o);
  add_block_selection(bootstrap, o);

  auto* acf = app.add_subcommand("acf", "Autocorrelation, Ljung-Box test and MBB bands");
  add_common(acf, o);
  add_blocks(acf, o);
  add_mbb(acf, o);
  add_acf(acf, o);
  add_block_selection(acf, o);

  auto* simulate = app.add_subcommand("simulate", "Model adequacy by simulation");
  add_common(simulate, o);
  add_blocks(simulate, o);
  add_simulate(simulate, o);

  auto* regress = app.add_subcommand("regress", "Interaction regression of MD on block and source");
  add_common(regress, o);
  add_blocks(regress, o);
  add_mbb(regress, o);
  add_regress(regress, o);
  regress->add_option("--profile", o.profile_csv, "Fit from a profile.csv instead of the texts");

  auto* surrogate = app.add_subcommand("surrogate", "Repeat an analysis on subblock-shuffled texts");
  add_common(surrogate, o);
  add_blocks(surrogate, o);
  add_mbb(surrogate, o);
  add_profile(surrogate, o);
  add_bootstrap(surrogate, o);
  add_acf(surrogate, o);
  add_block_selection(surrogate, o);
  add_simulate(surrogate, o);
  add_regress(surrogate, o);
  surrogate->add_option("--analysis", o.analysis, "profile, bootstrap, acf, simulate or regress");
  surrogate->add_option("--surrogates", o.surrogates, "Number of surrogate runs");
  surrogate->add_option("--replace", o.replace, "Sources replaced by surrogates")->delimiter(',');

  auto* probe = app.add_subcommand("probe", "Trigram scans, rankings, trends and categories");
  add_common(probe, o);
  add_blocks(probe, o);
  probe->add_option("--classes", o.classes, "V/C trigram classes to scan")->delimiter(',');
  probe->add_option("--threshold", o.threshold, "Significance threshold for trend candidates");
  probe->add_option("--md-trend", o.md_trend, "MD trend direction: auto, increasing, decreasing")
      ->check(CLI::IsMember({"auto", "increasing", "decreasing"}));
  probe->add_option("--annotations", o.annotations, "CSV with context,lemma[,category]");
  probe->add_option("--names", o.names, "CSV with character,form");
  probe->add_option("--probe-letters", o.probe_letters, "Letter trigrams to categorize")
      ->delimiter(',');
  probe->add_option("--thematic", o.thematic, "Thematic categories for co-occurrence")
      ->delimiter(',');
  probe->add_flag("--include-multiword", o.include_multiword,
                  "Categorize matches spanning several words too");
  probe->add_option("--min-token-len", o.min_token_len, "Minimum Latin token length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) o.command = sub->get_name();

  try {
    return run(o);
  } catch (const UsageError& e) {
    return report_error("usage", e.what(), kExitUsage);
  } catch (const DomainError& e) {
    return report_error("domain", e.what(), kExitDomain);
  } catch (const DataError& e) {
    return report_error("data", e.what(), kExitData);
  } catch (const json::exception& e) {
    return report_error("data", e.what(), kExitData);
  } catch (const fs::filesystem_error& e) {
    return report_error("data", e.what(), kExitData);
  } catch (const std::exception& e) {
    return report_error("data", e.what(), kExitData);
  }
}
