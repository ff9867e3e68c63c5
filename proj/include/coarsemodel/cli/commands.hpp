#pragma once

// Experiment drivers behind the command-line tool. Each command turns a merged
// JSON config into a set of artefacts (file name -> contents); the tool only
// parses flags and writes them out.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "coarsemodel/coarse/matching.hpp"
#include "coarsemodel/coarse/metric_space.hpp"
#include "coarsemodel/io/io.hpp"
#include "coarsemodel/lie/iwasawa.hpp"
#include "coarsemodel/lie/roots.hpp"
#include "coarsemodel/net/net.hpp"
#include "coarsemodel/quotient/quotient.hpp"

namespace coarsemodel::cli {

using io::Json;

enum ExitCode : int { kOk = 0, kConfigError = 2, kInfeasible = 3, kDegenerate = 4 };

inline constexpr std::string_view kVerbs[] = {"group-info", "net-build", "displace", "udbg",
                                              "quotient",   "folner",    "match"};

/// Defaults for a model; everything here can be overridden by the config file
/// and then by flags.
inline Json default_config(symspace::Model model) {
  using symspace::Model;
  Json c;
  c["model"] = std::string(symspace::to_string(model));
  c["seed"] = 0;
  c["ball_radius"] = 3;
  c["generators"] = {"a"};
  c["udbg"] = {{"radii", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}}, {"probes", 32}, {"freeness_length", 4}};
  c["quotient"] = {{"max_edge", nullptr}};
  c["folner"] = {{"group", "z2"}, {"max_n", 50}, {"r", 1.0}};
  c["match"] = {{"size", 100}, {"offset", {0.3, 0.4}}, {"radius", 1.0}};
  c["group_info"] = {{"samples", 100}};
  switch (model) {
    case Model::h3:
      c["lattice"] = {{"kind", "z2"}, {"rescale", 1.0}};
      c["a_box"] = {{"lo", {-2}}, {"hi", {2}}};
      break;
    case Model::h2:
    case Model::sl2r:
      c["lattice"] = {{"kind", "z1"}, {"rescale", 1.0}};
      c["a_box"] = {{"lo", {-2}}, {"hi", {2}}};
      break;
    case Model::sl3r:
      c["lattice"] = {{"kind", "heisenberg"}, {"rescale", 2.0}};
      c["a_box"] = {{"lo", {-1, -1}}, {"hi", {1, 1}}};
      c["ball_radius"] = 1;
      c["udbg"]["probes"] = 4;
      c["udbg"]["freeness_length"] = 3;
      break;
  }
  return c;
}

/// Precedence: flags > file > defaults. The model is resolved first because
/// it selects the defaults.
inline Json merge_config(const Json& file, const std::optional<std::string>& model_flag,
                         const std::optional<std::uint64_t>& seed_flag) {
  if (!file.is_null() && !file.is_object()) fail(ErrorKind::invalid_argument, "config must be a JSON object");
  std::string tag = "h3";
  if (file.is_object() && file.contains("model")) tag = file.at("model").get<std::string>();
  if (model_flag) tag = *model_flag;
  Json c = default_config(symspace::parse_model(tag));
  if (file.is_object()) c.merge_patch(file);
  c["model"] = tag;
  if (seed_flag) c["seed"] = *seed_flag;
  return c;
}

inline carnot::Word parse_word(const std::string& s) {
  carnot::Word w;
  if (s == "e") return w;
  for (char ch : s) {
    if (ch >= 'a' && ch <= 'z') {
      w.push_back(ch - 'a' + 1);
    } else if (ch >= 'A' && ch <= 'Z') {
      w.push_back(-(ch - 'A' + 1));
    } else {
      fail(ErrorKind::invalid_argument, "bad word '" + s + "': letters a..z for generators, A..Z for inverses");
    }
  }
  return w;
}

struct Experiment {
  Json config;
  symspace::WarpedMetric metric;
  carnot::LatticeSpec lattice;
  double rescale = 1.0;
  net::ABox box;
  int ball_radius = 0;
  std::uint64_t seed = 0;
};

inline Experiment load_experiment(const Json& c) {
  const symspace::Model model = symspace::parse_model(c.at("model").get<std::string>());
  symspace::WarpedMetric metric = symspace::WarpedMetric::model(model);
  const std::string kind = c.at("lattice").at("kind").get<std::string>();
  carnot::LatticeSpec spec = [&] {
    if (kind == "z1") return carnot::integer_lattice(1);
    if (kind == "z2") return carnot::integer_lattice(2);
    if (kind == "heisenberg") return carnot::integer_heisenberg();
    fail(ErrorKind::invalid_argument, "unknown lattice kind '" + kind + "' (z1, z2, heisenberg)");
  }();
  const double s = c.at("lattice").at("rescale").get<double>();
  if (!(s > 0)) fail(ErrorKind::invalid_argument, "lattice.rescale must be positive");
  if (!(spec.algebra == metric.algebra()))
    fail(ErrorKind::invalid_argument, "lattice '" + kind + "' does not live in the nilpotent group of model " + metric.name());
  if (s != 1.0) spec = carnot::rescale_lattice(spec, s, metric.base_metric(), 1).spec;
  net::ABox box{c.at("a_box").at("lo").get<std::vector<int>>(), c.at("a_box").at("hi").get<std::vector<int>>()};
  box.validate();
  if (box.rank() != metric.rank())
    fail(ErrorKind::invalid_argument, "a_box has rank " + std::to_string(box.rank()) + ", model " + metric.name() +
                                          " has rank " + std::to_string(metric.rank()));
  const int radius = c.at("ball_radius").get<int>();
  if (radius < 0) fail(ErrorKind::invalid_argument, "ball_radius must be non-negative");
  return {c, std::move(metric), std::move(spec), s, std::move(box), radius, c.at("seed").get<std::uint64_t>()};
}

inline net::NetWindow build_window(const Experiment& e) { return net::build_net(e.lattice, e.metric, e.box, e.ball_radius); }

struct Output {
  std::map<std::string, std::string> files;
  std::string summary;  // one line for stdout
  int exit_code = kOk;
};

inline void add_csv(Output& out, const std::string& name, std::string_view verb, const Json& config,
                    const io::CsvTable& t) {
  out.files[name] = t.render(verb, io::config_hash(config));
}

inline void add_json(Output& out, const std::string& name, const Json& j) { out.files[name] = j.dump(2) + "\n"; }

inline std::vector<std::string> indexed(const std::string& prefix, int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

inline Json interval_json(const carnot::Interval& i) {
  return {{"lower", io::number(i.lower)}, {"upper", io::number(i.upper)}, {"converged", i.converged}};
}

inline Output cmd_group_info(const Json& c) {
  const Experiment e = load_experiment(c);
  Json j;
  j["model"] = e.metric.name();
  j["rank"] = e.metric.rank();
  j["dimension"] = e.metric.dim();
  j["nilpotent"] = {{"algebra", e.metric.algebra().name()}, {"strata", e.metric.algebra().strata_dims()},
                    {"step", e.metric.algebra().step()}};
  Json blocks = Json::array();
  for (const auto& b : e.metric.blocks()) {
    std::vector<double> f(b.functional.data(), b.functional.data() + b.functional.size());
    blocks.push_back({{"label", b.label}, {"functional", f}, {"stratum", b.stratum}, {"offset", b.offset},
                      {"length", b.len}, {"weight", b.weight}});
  }
  j["root_blocks"] = blocks;
  std::optional<lie::AlgebraTag> tag;
  if (e.metric.name() == "sl2r") tag = lie::AlgebraTag::sl2r;
  if (e.metric.name() == "sl3r") tag = lie::AlgebraTag::sl3r;
  if (tag) {
    const lie::RootDatum d = lie::restricted_roots(*tag);
    std::vector<std::size_t> grading;
    for (const auto& g : d.grading) grading.push_back(g.size());
    j["restricted_roots"] = {{"rank", d.rank()},
                             {"roots", d.roots.size()},
                             {"positive", d.positive.size()},
                             {"simple", d.simple.size()},
                             {"grading_sizes", grading},
                             {"step", d.step()},
                             {"root_space_residual", lie::root_space_residual(d)},
                             {"grading_residual", lie::grading_residual(d)}};
    const auto r = lie::iwasawa_residuals(*tag, c.at("group_info").at("samples").get<std::size_t>(), e.seed);
    j["iwasawa"] = {{"samples", r.samples},           {"reconstruction", r.reconstruction},
                    {"orthogonality", r.orthogonality}, {"min_a", r.min_a},
                    {"off_diagonal_a", r.off_diagonal_a}, {"n_defect", r.n_defect}};
  } else {
    j["restricted_roots"] = nullptr;  // rank-one abelian model, no matrix group attached
  }
  Output out;
  add_json(out, "group_info.json", j);
  out.summary = "group-info " + e.metric.name() + ": rank " + std::to_string(e.metric.rank()) + ", step " +
                std::to_string(e.metric.algebra().step());
  return out;
}

inline Output cmd_net_build(const Json& c) {
  const Experiment e = load_experiment(c);
  const net::NetWindow w = build_window(e);
  const int r = e.metric.rank(), d = e.metric.algebra().dim();
  std::vector<std::string> header = indexed("a", r);
  header.push_back("word");
  for (const auto& h : indexed("g", d)) header.push_back(h);
  for (const auto& h : indexed("n", d)) header.push_back(h);
  io::CsvTable t(header);
  for (const auto& p : w.points()) {
    auto row = t.row();
    for (int x : p.a) row << x;
    row << carnot::word_to_string(p.g.word);
    for (int k = 0; k < d; ++k) row << p.g.point.coords(k);
    for (int k = 0; k < d; ++k) row << p.embedded.n.coords(k);
  }
  Json j{{"model", e.metric.name()},
         {"lattice", e.lattice.description},
         {"margin", interval_json(w.margin())},
         {"a_box", {{"lo", w.box().lo}, {"hi", w.box().hi}}},
         {"ball_radius", w.ball_radius()},
         {"points", w.size()},
         {"leaves", w.box().size()}};
  Output out;
  add_csv(out, "net.csv", "net-build", c, t);
  add_json(out, "net.json", j);
  out.summary = "net-build: " + std::to_string(w.size()) + " points, margin " + io::format_number(w.margin().lower);
  return out;
}

inline Output cmd_displace(const Json& c) {
  const Experiment e = load_experiment(c);
  const net::NetWindow w = build_window(e);
  std::vector<std::string> header = indexed("a", e.metric.rank());
  for (const char* h : {"word", "displacement_lower", "displacement_upper"}) header.push_back(h);
  io::CsvTable t(header);
  Json gens = Json::array();
  double sup = 0.0;
  for (const std::string& word : c.at("generators").get<std::vector<std::string>>()) {
    const carnot::Word wd = parse_word(word);
    for (int letter : wd)
      if (static_cast<std::size_t>(std::abs(letter)) > e.lattice.generators.size())
        fail(ErrorKind::invalid_argument, "word '" + word + "' uses a letter beyond the lattice generators");
    const auto prof = net::displacement_profile(w, net::lattice_element(e.lattice, wd));
    for (const auto& leaf : prof.leaves) {
      auto row = t.row();
      for (int x : leaf.a) row << x;
      row << word << leaf.displacement.lower << leaf.displacement.upper;
    }
    sup = std::max(sup, prof.sup_upper);
    gens.push_back({{"word", word},
                    {"d0", interval_json(prof.d0)},
                    {"sup_lower", prof.sup_lower},
                    {"sup_upper", prof.sup_upper},
                    {"mean_upper", prof.mean_upper},
                    {"excluded", prof.excluded},
                    {"admissible_c", io::number(prof.admissible_c)}});
  }
  Output out;
  add_csv(out, "displacement.csv", "displace", c, t);
  add_json(out, "displacement.json", {{"model", e.metric.name()}, {"generators", gens}});
  out.summary = "displace: sup displacement " + io::format_number(sup);
  return out;
}

inline Output cmd_udbg(const Json& c) {
  const Experiment e = load_experiment(c);
  const net::NetWindow w = build_window(e);
  const net::UdbgReport u = net::udbg_report(w, c.at("udbg").at("radii").get<std::vector<double>>());
  io::CsvTable t({"r", "max_count"});
  for (const auto& row : u.ball_counts) t.row() << row.r << row.max_count;
  const auto opt_json = [](const std::optional<double>& v) { return v ? Json(*v) : Json("none"); };

  const net::FreenessReport fr = net::freeness_check(w, c.at("udbg").at("freeness_length").get<int>());

  // Probes in the trusted interior: a at least 1 inside the box, n in [-1, 1]^d.
  const int r = e.metric.rank(), d = e.metric.algebra().dim();
  Eigen::VectorXd alo(r), ahi(r);
  for (int i = 0; i < r; ++i) {
    alo(i) = e.box.lo[static_cast<std::size_t>(i)] + 1.0;
    ahi(i) = std::max(alo(i), e.box.hi[static_cast<std::size_t>(i)] - 1.0);
  }
  const auto probes = net::halton_probes(alo, ahi, Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Constant(d, 1.0),
                                         c.at("udbg").at("probes").get<std::size_t>(), e.seed);
  const net::DensityReport dens = net::density_report(w, probes);

  Json j{{"model", e.metric.name()},
         {"points", w.size()},
         {"min_separation", opt_json(u.min_separation)},
         {"min_same_leaf", opt_json(u.min_same_leaf)},
         {"min_cross_leaf", opt_json(u.min_cross_leaf)},
         {"ball_count_slope", u.slope},
         {"freeness", {{"max_length", fr.max_length}, {"elements", fr.elements}, {"fixed", fr.fixed}}},
         {"density",
          {{"epsilon", dens.epsilon},
           {"probes", dens.rows.size()},
           {"excluded", dens.excluded},
           {"boundary_hits", dens.boundary_hits}}}};
  Output out;
  add_csv(out, "udbg.csv", "udbg", c, t);
  add_json(out, "udbg.json", j);
  out.summary = "udbg: min separation " + (u.min_separation ? io::format_number(*u.min_separation) : "none") +
                ", slope " + io::format_number(u.slope) + ", epsilon " + io::format_number(dens.epsilon);
  return out;
}

inline Output cmd_quotient(const Json& c) {
  const Experiment e = load_experiment(c);
  const net::NetWindow w = build_window(e);
  const auto act = net::net_action(w);
  quotient::QuotientOptions qo;
  const Json& me = c.at("quotient").at("max_edge");
  if (!me.is_null()) qo.max_edge = me.get<double>();
  const quotient::QuotientWindow q = quotient::build_quotient(quotient::net_pair_bounds(w), act, qo);
  const quotient::QuotientMatrix m = quotient::quotient_matrix(q);
  const quotient::AxiomReport ax = quotient::metric_axiom_check(q);

  const int r = e.metric.rank();
  std::vector<std::string> header{"class_i", "class_j"};
  for (const auto& h : indexed("ai", r)) header.push_back(h);
  for (const auto& h : indexed("aj", r)) header.push_back(h);
  header.push_back("lower");
  header.push_back("upper");
  io::CsvTable t(header);
  const auto leaf = [&](std::size_t cl) { return w[q.partition().classes[cl][0]].a; };
  for (std::size_t i = 0; i < q.num_classes(); ++i)
    for (std::size_t j = i + 1; j < q.num_classes(); ++j) {
      auto row = t.row();
      row << i << j;
      for (int x : leaf(i)) row << x;
      for (int x : leaf(j)) row << x;
      row << m.lower[i][j] << m.upper[i][j];
    }

  Json constants = nullptr;
  std::size_t truncated = 0;
  for (char f : q.partition().truncated) truncated += f ? 1 : 0;
  if (ax.connected) {
    const auto rep = quotient::coarse_model_check(w, act, q, r);
    constants = {{"image", rep.image},
                 {"class_map_lower", rep.class_map.pairs ? io::number(rep.class_map.lower) : Json()},
                 {"class_map_upper", rep.class_map.pairs ? io::number(rep.class_map.upper) : Json()},
                 {"pairs", rep.class_map.pairs},
                 {"distortion_c1", io::number(rep.distortion.c1)},
                 {"distortion_c2", io::number(rep.distortion.c2)}};
  }
  Json j{{"axioms",
          {{"pass", ax.pass()},
           {"symmetric", ax.symmetric},
           {"positive", ax.positive},
           {"triangle", ax.triangle},
           {"min_positive", io::number(ax.min_positive)},
           {"worst_triangle", ax.worst_triangle}}},
         {"constants", constants},
         {"flags", {{"classes", q.num_classes()}, {"truncated_classes", truncated}, {"connected", ax.connected}}}};
  Output out;
  add_csv(out, "quotient.csv", "quotient", c, t);
  add_json(out, "quotient.json", j);
  out.summary = "quotient: " + std::to_string(q.num_classes()) + " classes, axioms " + (ax.pass() ? "pass" : "fail");
  if (!ax.connected) {
    out.summary += " (class graph disconnected)";
    out.exit_code = kDegenerate;
  }
  return out;
}

inline Output cmd_folner(const Json& c) {
  const Json& f = c.at("folner");
  const std::string group = f.at("group").get<std::string>();
  const int max_n = f.at("max_n").get<int>();
  const double r = f.at("r").get<double>();
  if (max_n < 1) fail(ErrorKind::invalid_argument, "folner.max_n must be at least 1");
  const int pad = static_cast<int>(std::ceil(r));
  std::vector<std::vector<std::size_t>> sets;
  std::vector<std::size_t> labels;
  std::optional<coarse::FolnerProfile> prof;
  if (group == "z2") {
    const coarse::Z2Window win(max_n + pad);
    for (int n = 1; n <= max_n; ++n) {
      sets.push_back(win.ball(n));
      labels.push_back(static_cast<std::size_t>(n));
    }
    prof = coarse::folner_profile(sets, r, win.space(), labels);
  } else if (group == "f2") {
    if (max_n + pad > 12) fail(ErrorKind::invalid_argument, "folner.max_n too large for the free group window");
    const coarse::FreeGroupWindow win(max_n + pad);
    for (int n = 1; n <= max_n; ++n) {
      sets.push_back(win.ball(n));
      labels.push_back(static_cast<std::size_t>(n));
    }
    prof = coarse::folner_profile(sets, r, win.space(), labels);
  } else {
    fail(ErrorKind::invalid_argument, "unknown folner group '" + group + "' (z2, f2)");
  }
  io::CsvTable t({"n", "size", "boundary", "ratio"});
  for (const auto& row : prof->rows) t.row() << row.n << row.size << row.boundary << row.ratio;
  Output out;
  add_csv(out, "folner.csv", "folner", c, t);
  add_json(out, "folner.json",
           {{"group", group}, {"r", r}, {"verdict", prof->verdict}, {"last_ratio", prof->rows.back().ratio}});
  out.summary = "folner " + group + ": last ratio " + io::format_number(prof->rows.back().ratio) + " (" +
                prof->verdict + ", heuristic)";
  return out;
}

inline Output cmd_match(const Json& c) {
  const Json& m = c.at("match");
  const int size = m.at("size").get<int>();
  const auto offset = m.at("offset").get<std::vector<double>>();
  const double radius = m.at("radius").get<double>();
  if (size < 1 || offset.size() != 2) fail(ErrorKind::invalid_argument, "match needs size >= 1 and a 2D offset");
  std::vector<Eigen::VectorXd> a, b;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      a.push_back(Eigen::Vector2d(i, j));
      b.push_back(Eigen::Vector2d(i + offset[0], j + offset[1]));
    }
  const coarse::MatchingResult res = coarse::bounded_displacement_matching(a, b, radius);
  const auto dist = [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); };
  io::CsvTable t({"a_index", "b_index", "distance"});
  for (std::size_t i = 0; i < res.match_a.size(); ++i)
    if (res.match_a[i] != coarse::MatchingResult::npos) t.row() << i << res.match_a[i] << dist(i, res.match_a[i]);
  const bool verified = res.perfect && coarse::verify_matching(res, b.size(), dist, radius);
  Output out;
  add_csv(out, "matching.csv", "match", c, t);
  add_json(out, "match.json",
           {{"perfect", res.perfect},
            {"verified", verified},
            {"matched", res.matched},
            {"points", a.size()},
            {"radius", radius},
            {"max_displacement", res.max_displacement},
            {"hall_witness", res.witness.size()},
            {"hall_neighbours", res.witness_neighbours.size()}});
  out.summary = std::string("match: perfect: ") + (res.perfect ? "true" : "false") +
                ", maxDisp: " + io::format_number(res.max_displacement);
  if (!res.perfect) out.exit_code = kDegenerate;
  return out;
}

inline Output run_command(std::string_view verb, const Json& config) {
  if (verb == "group-info") return cmd_group_info(config);
  if (verb == "net-build") return cmd_net_build(config);
  if (verb == "displace") return cmd_displace(config);
  if (verb == "udbg") return cmd_udbg(config);
  if (verb == "quotient") return cmd_quotient(config);
  if (verb == "folner") return cmd_folner(config);
  if (verb == "match") return cmd_match(config);
  fail(ErrorKind::invalid_argument, "unknown command '" + std::string(verb) + "'");
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return kConfigError;
    case ErrorKind::numerical:
    case ErrorKind::infeasible: return kInfeasible;
    case ErrorKind::degenerate: return kDegenerate;
  }
  return kConfigError;
}

inline int main(int argc, char** argv) {
  CLI::App app{"coarsemodel: coarse models of symmetric spaces on finite windows"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", model;
  std::uint64_t seed = 0;
  std::vector<CLI::App*> subs;
  for (std::string_view verb : kVerbs) {
    CLI::App* sub = app.add_subcommand(std::string(verb));
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "64-bit seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--model", model, "model tag (" + std::string(symspace::kRegisteredModels) + ")");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) chosen = s;
  try {
    const Json file = config_path.empty() ? Json() : io::read_json_file(config_path);
    const std::optional<std::string> mflag = chosen->count("--model") ? std::optional(model) : std::nullopt;
    const std::optional<std::uint64_t> sflag = chosen->count("--seed") ? std::optional(seed) : std::nullopt;
    const Json config = merge_config(file, mflag, sflag);
    const Output out = run_command(chosen->get_name(), config);
    for (const auto& [name, text] : out.files) io::write_text(std::filesystem::path(out_dir) / name, text);
    std::cout << out.summary << "\n";
    for (const auto& [name, text] : out.files) std::cout << "  wrote " << (std::filesystem::path(out_dir) / name).string() << "\n";
    return out.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace coarsemodel::cli
