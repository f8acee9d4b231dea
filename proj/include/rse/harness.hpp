// Scenario configuration, orchestration and artifact output (CSV, JSON report, SVG).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rse/drl.hpp"
#include "rse/error.hpp"
#include "rse/estimation.hpp"
#include "rse/game_closed.hpp"
#include "rse/game_open.hpp"

namespace rse {

using json = nlohmann::json;

enum class Scenario { verify_model, oracle, open_centralized, open_distributed, closed_distributed };

inline std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::verify_model: return "verify-model";
    case Scenario::oracle: return "oracle";
    case Scenario::open_centralized: return "open-centralized";
    case Scenario::open_distributed: return "open-distributed";
    case Scenario::closed_distributed: return "closed-distributed";
    }
    return "?";
}

inline Scenario parse_scenario(const std::string &name) {
    for (Scenario s : {Scenario::verify_model, Scenario::oracle, Scenario::open_centralized,
                       Scenario::open_distributed, Scenario::closed_distributed})
        if (to_string(s) == name) return s;
    throw ValidationError("scenario", "unknown scenario '" + name + "'");
}

struct ModelMatrices {
    Matrix A{{2.0, 1.0}, {0.7, 0.8}};
    Matrix C{{1.0, 0.0}, {0.0, 2.0}};
    Matrix Q{{0.6, 0.0}, {0.0, 0.6}};
    Matrix R{{0.7, 0.0}, {0.0, 0.4}};
    Matrix Pi0 = Matrix::identity(2);
};

struct OpenLoopOptions {
    // Episodes restart from the steady state once trace(P) exceeds this.
    double reset_trace = 100.0;
    FeatureTransform features = FeatureTransform::raw;
};

struct ClosedLoopOptions {
    // A string names a model ("exp"); a number in [0, 1] is a constant packet error rate.
    json per = "exp";
    Matrix initial_belief{{0.5, 0.5}, {0.5, 0.5}};
    std::vector<Matrix> probe_beliefs{Matrix{{0.5, 0.5}, {0.5, 0.5}}, Matrix{{0.8, 0.2}, {0.6, 0.4}}};
};

struct OracleOptions {
    std::size_t depth = 4;
    double tol = 1e-8;
};

struct VerifyOptions {
    std::size_t loss_steps = 5;
    std::size_t recovery_steps = 15;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::open_centralized;
    ModelMatrices model;
    CostSchedule costs{{7.0, 5.0}, {6.0, 6.0}};
    PowerSchedule powers{{0.3, 0.2}, {0.7, 0.8}, {0.5, 0.5}, 0.1};
    double rho = 0.8;
    OpenLoopOptions open_loop;
    ClosedLoopOptions closed_loop;
    OracleOptions oracle;
    VerifyOptions verify;
    LearnerConfig learner;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::filesystem::path output_dir = "out";

    SystemModel system_model() const {
        try {
            return SystemModel(model.A, model.C, model.Q, model.R, model.Pi0);
        } catch (const ValidationError &) {
            throw;
        } catch (const Error &e) {
            throw ValidationError("model", e.what());
        }
    }

    DiscountedGame game() const { return DiscountedGame(system_model(), costs, rho); }

    PerModel per_model() const {
        if (closed_loop.per.is_string()) {
            if (closed_loop.per.get<std::string>() == "exp") return PerModel::exponential();
            throw ValidationError("closed_loop.per", "unknown model '" + closed_loop.per.get<std::string>() + "'");
        }
        if (closed_loop.per.is_number()) {
            const double v = closed_loop.per.get<double>();
            if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("closed_loop.per", "constant must lie in [0, 1]");
            return PerModel::constant(v);
        }
        throw ValidationError("closed_loop.per", "must be a model name or a number");
    }

    OpenLoopEnv open_env() const { return OpenLoopEnv(game(), open_loop.features, open_loop.reset_trace); }

    ClosedLoopEnv closed_env() const {
        auto belief = [](const Matrix &m, const std::string &field) {
            try {
                return BeliefMatrix(m);
            } catch (const Error &e) {
                throw ValidationError(field, e.what());
            }
        };
        std::vector<BeliefMatrix> probes;
        for (const auto &p : closed_loop.probe_beliefs) probes.push_back(belief(p, "closed_loop.probe_beliefs"));
        return ClosedLoopEnv(powers, per_model(), costs_from_powers(powers),
                             belief(closed_loop.initial_belief, "closed_loop.initial_belief"), std::move(probes));
    }

    // Every invariant the chosen scenario depends on.
    void validate() const {
        if (seeds.empty()) throw ValidationError("seeds", "need at least one seed");
        if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho", "discount must lie in (0, 1)");
        learner.validate();
        if (learner.rho != rho) throw ValidationError("rho", "learner discount differs from the game discount");
        if (oracle.depth < 1) throw ValidationError("oracle.depth", "must be >= 1");
        if (!(oracle.tol > 0.0)) throw ValidationError("oracle.tol", "must be > 0");
        if (!(open_loop.reset_trace > 0.0)) throw ValidationError("open_loop.reset_trace", "must be > 0");
        if (scenario == Scenario::closed_distributed) {
            closed_env();
        } else {
            const SystemModel m = system_model();
            try {
                costs.validate(m.devices());
            } catch (const ValidationError &) {
                throw;
            } catch (const Error &e) {
                throw ValidationError("costs", e.what());
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Config loading

namespace detail {

// Reads the known keys of one JSON object and rejects the rest.
class ObjectReader {
public:
    ObjectReader(const json &obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) throw ValidationError(prefix_.empty() ? "config" : prefix_, "must be an object");
    }

    template <class T>
    void get(const std::string &key, T &out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception &) {
            throw ValidationError(field(key), "has the wrong type");
        }
    }

    void get_matrix(const std::string &key, Matrix &out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it != obj_.end()) out = to_matrix(*it, field(key));
    }

    const json *child(const std::string &key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string field(const std::string &key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void finish() const {
        for (const auto &[key, value] : obj_.items())
            if (!seen_.count(key)) throw UnknownKey(field(key));
    }

    static Matrix to_matrix(const json &j, const std::string &field) {
        if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty())
            throw ValidationError(field, "must be a non-empty array of rows");
        const std::size_t cols = j.front().size();
        Matrix m(j.size(), cols);
        for (std::size_t r = 0; r < j.size(); ++r) {
            if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(field, "rows must have equal length");
            for (std::size_t c = 0; c < cols; ++c) {
                if (!j[r][c].is_number()) throw ValidationError(field, "entries must be numbers");
                m(r, c) = j[r][c].get<double>();
            }
        }
        return m;
    }

private:
    const json &obj_;
    std::string prefix_;
    std::set<std::string> seen_;
};

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline void read_learner(const json &j, LearnerConfig &l) {
    ObjectReader r(j, "learner");
    r.get("eta", l.eta);
    r.get("eta_attacker", l.eta_attacker);
    r.get("epsilon", l.epsilon);
    r.get("epsilon_final", l.epsilon_final);
    r.get("epsilon_decay_steps", l.epsilon_decay_steps);
    r.get("sync_period", l.sync_period);
    r.get("batch_size", l.batch_size);
    r.get("replay_capacity", l.replay_capacity);
    r.get("max_episodes", l.max_episodes);
    r.get("episode_length", l.episode_length);
    r.get("convergence_threshold", l.convergence_threshold);
    r.get("convergence_window", l.convergence_window);
    r.get("hidden_layers", l.hidden_layers);
    r.get("td_error_clip", l.td_error_clip);
    r.get("log_every", l.log_every);
    r.finish();
}

} // namespace detail

/// Parses a JSON scenario description. Missing keys keep their defaults (the
/// two-device example system); unknown keys are rejected.
inline ScenarioConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        const std::size_t line = detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(e.what(), line);
    }

    ScenarioConfig cfg;
    detail::ObjectReader top(root, "");
    std::string scenario = to_string(cfg.scenario);
    top.get("scenario", scenario);
    cfg.scenario = parse_scenario(scenario);
    top.get("rho", cfg.rho);
    top.get("seeds", cfg.seeds);
    std::string out = cfg.output_dir.string();
    top.get("output_dir", out);
    cfg.output_dir = out;

    if (const json *m = top.child("model")) {
        detail::ObjectReader r(*m, "model");
        r.get_matrix("A", cfg.model.A);
        r.get_matrix("C", cfg.model.C);
        r.get_matrix("Q", cfg.model.Q);
        r.get_matrix("R", cfg.model.R);
        r.get_matrix("Pi0", cfg.model.Pi0);
        r.finish();
    }
    if (const json *c = top.child("costs")) {
        detail::ObjectReader r(*c, "costs");
        r.get("device", cfg.costs.c);
        r.get("attacker", cfg.costs.c_beta);
        r.finish();
    }
    if (const json *p = top.child("powers")) {
        detail::ObjectReader r(*p, "powers");
        r.get("a0", cfg.powers.a0);
        r.get("a1", cfg.powers.a1);
        r.get("b1", cfg.powers.b1);
        r.get("n0", cfg.powers.n0);
        r.finish();
    }
    if (const json *o = top.child("open_loop")) {
        detail::ObjectReader r(*o, "open_loop");
        r.get("reset_trace", cfg.open_loop.reset_trace);
        std::string features = "raw";
        r.get("features", features);
        if (features == "raw")
            cfg.open_loop.features = FeatureTransform::raw;
        else if (features == "log")
            cfg.open_loop.features = FeatureTransform::log;
        else
            throw ValidationError("open_loop.features", "must be \"raw\" or \"log\"");
        r.finish();
    }
    if (const json *c = top.child("closed_loop")) {
        detail::ObjectReader r(*c, "closed_loop");
        r.get("per", cfg.closed_loop.per);
        r.get_matrix("initial_belief", cfg.closed_loop.initial_belief);
        if (const json *probes = r.child("probe_beliefs")) {
            if (!probes->is_array() || probes->empty())
                throw ValidationError("closed_loop.probe_beliefs", "must be a non-empty array of matrices");
            cfg.closed_loop.probe_beliefs.clear();
            for (const auto &p : *probes)
                cfg.closed_loop.probe_beliefs.push_back(detail::ObjectReader::to_matrix(p, "closed_loop.probe_beliefs"));
        }
        r.finish();
    }
    if (const json *o = top.child("oracle")) {
        detail::ObjectReader r(*o, "oracle");
        r.get("depth", cfg.oracle.depth);
        r.get("tol", cfg.oracle.tol);
        r.finish();
    }
    if (const json *v = top.child("verify")) {
        detail::ObjectReader r(*v, "verify");
        r.get("loss_steps", cfg.verify.loss_steps);
        r.get("recovery_steps", cfg.verify.recovery_steps);
        r.finish();
    }
    if (const json *l = top.child("learner")) detail::read_learner(*l, cfg.learner);
    top.finish();

    cfg.learner.rho = cfg.rho;
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

// ---------------------------------------------------------------------------
// CSV output

inline constexpr std::array<std::string_view, 10> kLogColumns{
    "scenario", "seed", "episode", "step", "state_id", "alpha_bits", "beta_bits", "reward", "loss_device", "loss_attacker"};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string log_header(const EpisodeLog &log) {
    std::string h;
    for (std::size_t i = 0; i < kLogColumns.size(); ++i) {
        if (i) h += ',';
        h += kLogColumns[i];
    }
    for (const auto &c : log.q_columns) h += "," + c;
    return h;
}

inline void write_csv(const EpisodeLog &log, const std::string &scenario, std::uint64_t seed,
                      const std::filesystem::path &path) {
    if (log.records.empty()) throw EmptyLog("episode log has no records");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << log_header(log) << '\n';
    for (const auto &r : log.records) {
        out << scenario << ',' << seed << ',' << r.episode << ',' << r.step << ',' << r.state_id << ','
            << bits_to_string(r.action.alpha) << ',' << bits_to_string(r.action.beta) << ',' << format_number(r.reward)
            << ',' << format_number(r.loss_device) << ',' << format_number(r.loss_attacker);
        for (double q : r.q_probe) out << ',' << format_number(q);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// verify-model: forced all-loss steps from the steady state, then lossless recovery

struct TraceRow {
    std::size_t step;
    std::string arrivals;  // empty for the starting state
    ErrorCovariance p;
};

inline std::vector<TraceRow> verify_model_trace(const SystemModel &model, std::size_t loss_steps,
                                                std::size_t recovery_steps) {
    const std::size_t n = model.devices();
    std::vector<TraceRow> rows;
    ErrorCovariance p = steady_state_covariance(model);
    rows.push_back({0, "", p});
    for (std::size_t k = 1; k <= loss_steps + recovery_steps; ++k) {
        const Mask gamma(n, k > loss_steps);
        p = masked_update(p, gamma, model);
        rows.push_back({k, bits_to_string(gamma), p});
    }
    return rows;
}

inline void write_trace_csv(const std::vector<TraceRow> &rows, const std::filesystem::path &path) {
    if (rows.empty()) throw EmptyLog("trace has no rows");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const std::size_t m = rows.front().p.dim();
    out << "step,arrivals,trace";
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) out << ",p" << i + 1 << '_' << j + 1;
    out << '\n';
    for (const auto &r : rows) {
        out << r.step << ',' << r.arrivals << ',' << format_number(r.p.trace());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) out << ',' << format_number(r.p.matrix()(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// SVG line charts built from a CSV file

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidArgument("CSV has no column '" + std::string(name) + "'");
    }
};

inline CsvTable read_csv(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    auto split = [](const std::string &line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw EmptyLog(path.string() + " is empty");
    t.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    if (t.rows.empty()) throw EmptyLog(path.string() + " has no data rows");
    return t;
}

struct PlotSpec {
    std::string title;
    std::string x_column = "step";
    std::vector<std::string> y_columns;
    bool log_y = false;
};

/// Renders the chosen columns against x as polylines in a fixed 720x420 frame.
inline void emit_plot(const std::filesystem::path &csv, const std::filesystem::path &svg, const PlotSpec &spec) {
    const CsvTable t = read_csv(csv);
    const std::size_t xc = t.column(spec.x_column);
    std::vector<std::vector<std::pair<double, double>>> series;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto &name : spec.y_columns) {
        const std::size_t yc = t.column(name);
        auto &pts = series.emplace_back();
        for (const auto &row : t.rows) {
            if (yc >= row.size() || row[yc].empty() || row[xc].empty()) continue;
            const double x = std::stod(row[xc]);
            double y = std::stod(row[yc]);
            if (spec.log_y) {
                if (!(y > 0.0)) continue;
                y = std::log10(y);
            }
            pts.emplace_back(x, y);
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) throw EmptyLog("nothing to plot in " + csv.string());
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;

    constexpr double W = 720, H = 420, L = 70, R = 170, T = 40, B = 50;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto label = [&](double y) { return format_number(spec.log_y ? std::pow(10.0, y) : y); };
    static constexpr std::array<const char *, 8> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                        "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    std::ofstream out(svg, std::ios::binary);
    if (!out) throw IoError("cannot write " + svg.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << spec.title << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0;
        const double xv = x0 + (x1 - x0) * k / 4.0;
        out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << label(yv) << "</text>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << format_number(xv)
            << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << spec.x_column
        << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char *color = colors[s % colors.size()];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto &[x, y] : series[s]) out << px(x) << ',' << py(y) << ' ';
        out << "\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << spec.y_columns[s] << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed for " + svg.string());
}

// ---------------------------------------------------------------------------
// Scenario runs

/// Mean of the first (or last) `count` finite entries.
inline double window_mean(const std::vector<double> &values, std::size_t count, bool from_end) {
    double sum = 0.0;
    std::size_t used = 0;
    auto take = [&](double v) {
        if (used < count && std::isfinite(v)) sum += v, ++used;
    };
    if (from_end)
        for (auto it = values.rbegin(); it != values.rend(); ++it) take(*it);
    else
        for (double v : values) take(v);
    return used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

struct SeedReport {
    std::uint64_t seed = 0;
    PolicyTable ne;
    std::size_t steps = 0;
    bool converged = false;
    double initial_loss_device = NAN, final_loss_device = NAN;
    double initial_loss_attacker = NAN, final_loss_attacker = NAN;
    Vector final_probe_q;  // layout of the log's q columns
    std::vector<std::string> q_columns;
    std::vector<std::string> artifacts;
};

struct RunReport {
    Scenario scenario = Scenario::verify_model;
    std::vector<SeedReport> seeds;
    std::optional<OracleResult> oracle;
    std::vector<TraceRow> trace;
    std::vector<std::string> artifacts;

    json to_json() const {
        auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
        json j;
        j["scenario"] = to_string(scenario);
        j["artifacts"] = artifacts;
        j["seeds"] = json::array();
        for (const auto &s : seeds) {
            json e;
            e["seed"] = s.seed;
            e["steps"] = s.steps;
            e["converged"] = s.converged;
            e["ne"] = json::array();
            for (std::size_t p = 0; p < s.ne.actions.size(); ++p)
                e["ne"].push_back({{"state", s.ne.state_ids[p]}, {"action", to_string(s.ne.actions[p])}});
            e["loss_device"] = {{"initial", num(s.initial_loss_device)}, {"final", num(s.final_loss_device)}};
            e["loss_attacker"] = {{"initial", num(s.initial_loss_attacker)}, {"final", num(s.final_loss_attacker)}};
            e["artifacts"] = s.artifacts;
            j["seeds"].push_back(std::move(e));
        }
        if (oracle) {
            json o;
            o["ne"] = to_string(oracle->ne);
            o["states"] = oracle->states.size();
            o["value_at_steady_state"] = oracle->values.front();
            o["sweeps"] = oracle->sweep_changes.size();
            o["root_q"] = oracle->root_q;
            j["oracle"] = std::move(o);
        }
        if (!trace.empty()) {
            j["trace"] = json::array();
            for (const auto &r : trace) j["trace"].push_back(r.p.trace());
        }
        return j;
    }
};

namespace detail {

template <class Result>
SeedReport summarize(const Result &r, std::uint64_t seed) {
    SeedReport s;
    s.seed = seed;
    s.ne = r.policy;
    s.steps = r.log.steps;
    s.converged = r.log.converged;
    s.initial_loss_device = window_mean(r.log.device_losses, 100, false);
    s.final_loss_device = window_mean(r.log.device_losses, 100, true);
    s.initial_loss_attacker = window_mean(r.log.attacker_losses, 100, false);
    s.final_loss_attacker = window_mean(r.log.attacker_losses, 100, true);
    s.final_probe_q = r.log.records.back().q_probe;
    s.q_columns = r.log.q_columns;
    return s;
}

// Runs fn(seed) for every seed on its own thread; results keep the seed order.
template <class Fn>
std::vector<SeedReport> run_seeds(const std::vector<std::uint64_t> &seeds, Fn fn) {
    std::vector<SeedReport> out(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        workers.emplace_back([&, i] {
            try {
                out[i] = fn(seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    for (auto &w : workers) w.join();
    for (const auto &e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline std::vector<std::string> columns_with_prefix(const std::vector<std::string> &cols, std::string_view prefix) {
    std::vector<std::string> out;
    for (const auto &c : cols)
        if (c.rfind(prefix, 0) == 0) out.push_back(c);
    return out;
}

template <class Env, class Learn>
std::vector<SeedReport> run_learning(const ScenarioConfig &cfg, const Env &env, Learn learn, bool plots) {
    const std::string name = to_string(cfg.scenario);
    return run_seeds(cfg.seeds, [&](std::uint64_t seed) {
        LearnerConfig lc = cfg.learner;
        lc.seed = seed;
        const auto result = learn(env, lc);
        SeedReport s = summarize(result, seed);
        const auto csv = cfg.output_dir / (name + "_seed" + std::to_string(seed) + ".csv");
        write_csv(result.log, name, seed, csv);
        s.artifacts.push_back(csv.string());
        if (plots) {
            const bool distributed = !result.log.attacker_losses.empty();
            const auto loss_svg = cfg.output_dir / (name + "_seed" + std::to_string(seed) + "_loss.svg");
            PlotSpec loss{name + " loss, seed " + std::to_string(seed), "step", {"loss_device"}, true};
            if (distributed) loss.y_columns.push_back("loss_attacker");
            emit_plot(csv, loss_svg, loss);
            const auto q_svg = cfg.output_dir / (name + "_seed" + std::to_string(seed) + "_q.svg");
            PlotSpec q{name + " Q at the first probe, seed " + std::to_string(seed), "step",
                       columns_with_prefix(result.log.q_columns, distributed ? "qd_p0_" : "q_p0_a00_"), false};
            if (distributed)
                for (auto &c : columns_with_prefix(result.log.q_columns, "qa_p0_")) q.y_columns.push_back(c);
            emit_plot(csv, q_svg, q);
            s.artifacts.push_back(loss_svg.string());
            s.artifacts.push_back(q_svg.string());
        }
        return s;
    });
}

} // namespace detail

/// Runs one scenario, writing CSV logs, optional SVG plots and report.json into
/// cfg.output_dir.
inline RunReport run_scenario(const ScenarioConfig &cfg, bool plots = false) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

    RunReport report;
    report.scenario = cfg.scenario;
    switch (cfg.scenario) {
    case Scenario::verify_model: {
        report.trace = verify_model_trace(cfg.system_model(), cfg.verify.loss_steps, cfg.verify.recovery_steps);
        const auto csv = cfg.output_dir / "verify-model.csv";
        write_trace_csv(report.trace, csv);
        report.artifacts.push_back(csv.string());
        if (plots) {
            const auto svg = cfg.output_dir / "verify-model.svg";
            emit_plot(csv, svg, PlotSpec{"trace of the error covariance", "step", {"trace"}, false});
            report.artifacts.push_back(svg.string());
        }
        break;
    }
    case Scenario::oracle: {
        report.oracle = tabular_oracle(cfg.game(), cfg.oracle.depth, cfg.oracle.tol);
        const auto csv = cfg.output_dir / "oracle.csv";
        std::ofstream out(csv, std::ios::binary);
        if (!out) throw IoError("cannot write " + csv.string());
        out << "state,depth,trace,value\n";
        for (std::size_t s = 0; s < report.oracle->states.size(); ++s)
            out << s << ',' << report.oracle->depth[s] << ',' << format_number(report.oracle->states[s].trace()) << ','
                << format_number(report.oracle->values[s]) << '\n';
        if (!out) throw IoError("write failed for " + csv.string());
        report.artifacts.push_back(csv.string());
        break;
    }
    case Scenario::open_centralized:
        report.seeds = detail::run_learning(
            cfg, cfg.open_env(), [](const auto &env, const LearnerConfig &lc) { return run_centralized(env, lc); },
            plots);
        break;
    case Scenario::open_distributed:
        report.seeds = detail::run_learning(
            cfg, cfg.open_env(), [](const auto &env, const LearnerConfig &lc) { return run_distributed(env, lc); },
            plots);
        break;
    case Scenario::closed_distributed:
        report.seeds = detail::run_learning(
            cfg, cfg.closed_env(), [](const auto &env, const LearnerConfig &lc) { return run_distributed(env, lc); },
            plots);
        break;
    }
    for (const auto &s : report.seeds)
        report.artifacts.insert(report.artifacts.end(), s.artifacts.begin(), s.artifacts.end());

    const auto path = cfg.output_dir / "report.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << report.to_json().dump(2) << '\n';
    report.artifacts.push_back(path.string());
    return report;
}

} // namespace rse
