#include "ppcr/scenario.hpp"

#include "ppcr/errors.hpp"

#include <json.hpp>
#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string_view>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ppcr {

using nlohmann::json;

namespace {

std::string describe(const json& v) {
    std::string s = v.dump();
    if (s.size() > 40) s = s.substr(0, 37) + "...";
    return s;
}

// Strict object reader: every key must be consumed, errors carry the path.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }
    std::string at_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& get(const std::string& key) {
        if (!obj_.contains(key)) throw ConfigError(at_path(key) + ": missing required field");
        seen_.insert(key);
        return obj_.at(key);
    }

    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(at_path(key) + ": expected a number, got " + describe(v));
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    long long integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(at_path(key) + ": expected an integer, got " + describe(v));
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = get(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
        throw ConfigError(at_path(key) + ": expected a non-negative integer, got " + describe(v));
    }

    std::string string(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(at_path(key) + ": expected a string, got " + describe(v));
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = get(key);
        if (!v.is_boolean()) throw ConfigError(at_path(key) + ": expected true or false, got " + describe(v));
        return v.get<bool>();
    }

    /// Rejects keys outside `known` before anything else is read.
    void allow(std::initializer_list<std::string_view> known) const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
                throw ConfigError(at_path(it.key()) + ": unknown field");
            }
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(at_path(it.key()) + ": unknown field");
        }
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Vector to_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

std::vector<double> to_list(const json& v, const std::string& path) {
    const Vector x = to_vector(v, path);
    return {x.data(), x.data() + x.size()};
}

Matrix to_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw ConfigError(path + "[0]: expected a non-empty row");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!v[r].is_array() || v[r].size() != cols) throw ConfigError(rp + ": expected a row of " + std::to_string(cols));
        out.row(static_cast<Eigen::Index>(r)) = to_vector(v[r], rp).transpose();
    }
    return out;
}

MatrixSpec to_matrix_spec(const json& v, const std::string& path) {
    if (v.is_object()) {
        Fields top(v, path);
        Fields f(top.get("uniform"), top.at_path("uniform"));
        top.finish();
        UniformMatrixSpec u;
        u.low = f.number("low", -1.0);
        u.high = f.number("high", 1.0);
        u.rows = static_cast<int>(f.integer("rows"));
        u.cols = static_cast<int>(f.integer("cols"));
        u.seed = f.u64("seed", 0);
        f.finish();
        if (u.rows < 1 || u.cols < 1) throw ConfigError(path + ".uniform: rows and cols must be >= 1");
        if (!(u.high > u.low)) throw ConfigError(path + ".uniform: high must exceed low");
        return u;
    }
    return to_matrix(v, path);
}

Graph graph_from(const json& v, const std::string& path) {
    Fields f(v, path);
    Graph g;
    g.n = static_cast<int>(f.integer("n"));
    const json& edges = f.get("edges");
    if (!edges.is_array()) throw ConfigError(f.at_path("edges") + ": expected an array of [i, j] pairs");
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const json& p = edges[e];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
            throw ConfigError(f.at_path("edges") + "[" + std::to_string(e) + "]: expected [i, j]");
        }
        g.edges.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    f.finish();
    try {
        validate(g);
    } catch (const InvalidInput& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return g;
}

json parse_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": malformed JSON (" + e.what() + ")");
    }
}

template <class F>
auto wrap(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

PsdMatrix budget_from(const json& v, Eigen::Index m, const std::string& path) {
    if (v.is_number()) return PsdMatrix::scaled_identity(m, v.get<double>());
    if (v.is_array() && !v.empty() && v[0].is_number()) {
        const Vector d = to_vector(v, path);
        if (d.size() != m) throw ConfigError(path + ": diagonal must have one entry per row of H");
        return wrap(path, [&] { return PsdMatrix(Matrix(d.asDiagonal())); });
    }
    const Matrix s = to_matrix(v, path);
    if (s.rows() != m || s.cols() != m) throw ConfigError(path + ": must be m x m with m the rows of H");
    return wrap(path, [&] { return PsdMatrix(s); });
}

SensorBlock block_from(const json& v, const std::string& path) {
    Fields f(v, path);
    SensorBlock b;
    b.H = to_matrix(f.get("H"), f.at_path("H"));
    const Eigen::Index m = b.H.rows();
    b.budget = budget_from(f.get("S"), m, f.at_path("S"));
    if (f.has("sigma_w") && f.has("Sigma_w")) throw ConfigError(path + ": give sigma_w or Sigma_w, not both");
    if (f.has("Sigma_w")) {
        const Matrix c = to_matrix(f.get("Sigma_w"), f.at_path("Sigma_w"));
        if (c.rows() != m || c.cols() != m) throw ConfigError(f.at_path("Sigma_w") + ": must be m x m");
        b.noise_cov = wrap(f.at_path("Sigma_w"), [&] { return PsdMatrix(c); });
    } else {
        const double s = f.number("sigma_w");
        if (!(s >= 0.0)) throw ConfigError(f.at_path("sigma_w") + ": must be >= 0");
        b.noise_cov = PsdMatrix::scaled_identity(m, s * s);
    }
    f.finish();
    return b;
}

std::string_view gain_name(GainVariant g) { return g == GainVariant::sqrt_budget ? "sqrt-budget" : "as-printed"; }
std::string_view fusion_name(FusionIndex f) { return f == FusionIndex::previous ? "previous" : "current"; }

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    double a = 0.0, step = 0.0, b = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> a >> c1 >> step >> c2 >> b) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
        throw ConfigError("grid: expected \"start:step:stop\", got \"" + text + "\"");
    }
    if (!(step > 0.0) || !(b >= a)) throw ConfigError("grid: need step > 0 and stop >= start");
    const auto count = static_cast<long long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1000000) throw ConfigError("grid: too many points");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        // strip accumulated rounding (0.30000000000000004 -> 0.3)
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", a + static_cast<double>(i) * step);
        out.push_back(std::strtod(buf, nullptr));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Graph parse_graph_json(const std::string& text) { return graph_from(parse_text(text, "graph"), "graph"); }

Graph load_graph(const std::filesystem::path& path) {
    return graph_from(parse_text(read_text_file(path), path.string()), "graph");
}

ExperimentSpec parse_scenario_json(const std::string& text, const std::filesystem::path& base_dir) {
    const json root = parse_text(text, "scenario");
    Fields f(root, "");
    f.allow({"scenario", "seed", "reps", "sigma_w", "iterations", "theta", "H", "rows_per_sensor", "grid",
             "mechanisms", "twin", "graph", "budget_s", "algorithms", "online", "initial", "budgets",
             "agent_values", "inject_noise"});
    ExperimentSpec spec;
    spec.scenario = wrap("scenario", [&] { return parse_scenario(f.string("scenario")); });
    spec.seed = f.u64("seed", spec.seed);
    const long long reps = f.integer("reps", static_cast<long long>(spec.reps));
    if (reps < 1) throw ConfigError("reps: must be >= 1");
    spec.reps = static_cast<std::size_t>(reps);
    spec.sigma_w = f.number("sigma_w", spec.sigma_w);
    spec.iterations = static_cast<int>(f.integer("iterations", spec.iterations));

    const bool needs_model = spec.scenario != Scenario::consensus;
    if (needs_model || f.has("theta")) spec.theta = to_vector(f.get("theta"), "theta");
    if (needs_model || f.has("H")) spec.H = to_matrix_spec(f.get("H"), "H");
    spec.rows_per_sensor = static_cast<int>(f.integer("rows_per_sensor", spec.rows_per_sensor));

    if (f.has("grid")) {
        const json& g = f.get("grid");
        spec.grid = g.is_string() ? wrap("grid", [&] { return parse_grid(g.get<std::string>()); })
                                  : to_list(g, "grid");
    }
    if (f.has("mechanisms")) {
        const json& ms = f.get("mechanisms");
        if (!ms.is_array()) throw ConfigError("mechanisms: expected an array");
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const std::string p = "mechanisms[" + std::to_string(i) + "]";
            Fields mf(ms[i], p);
            MechanismDescriptor d;
            d.kind = wrap(mf.at_path("kind"), [&] { return parse_mechanism_kind(mf.string("kind")); });
            d.budget_s = mf.number("budget_s", d.budget_s);
            d.tau = mf.number("tau", d.tau);
            mf.finish();
            if (!(d.budget_s > 0.0)) throw ConfigError(mf.at_path("budget_s") + ": must be > 0");
            spec.mechanisms.push_back(d);
        }
    }
    if (f.has("twin")) {
        Fields tf(f.get("twin"), "twin");
        spec.twin_margin = tf.number("margin", spec.twin_margin);
        spec.twin_center = tf.number("center", spec.twin_center);
        tf.finish();
    }

    if (f.has("graph")) {
        const json& g = f.get("graph");
        if (g.is_string()) {
            const std::filesystem::path p = base_dir / g.get<std::string>();
            spec.graph = load_graph(p);
        } else {
            spec.graph = graph_from(g, "graph");
        }
    }
    spec.budget_s = f.number("budget_s", spec.budget_s);
    if (f.has("algorithms")) {
        const json& as = f.get("algorithms");
        if (!as.is_array()) throw ConfigError("algorithms: expected an array of names");
        for (std::size_t i = 0; i < as.size(); ++i) {
            const std::string p = "algorithms[" + std::to_string(i) + "]";
            if (!as[i].is_string()) throw ConfigError(p + ": expected a string");
            spec.algorithms.push_back(wrap(p, [&] { return parse_release_kind(as[i].get<std::string>()); }));
        }
    }
    if (f.has("online")) {
        Fields of(f.get("online"), "online");
        OnlineParams& o = spec.online;
        o.tau = of.number("tau", o.tau);
        o.b = of.number("b", o.b);
        o.k0 = of.number("k0", o.k0);
        o.zeta = of.number("zeta", o.zeta);
        if (of.has("gain")) {
            const std::string g = of.string("gain");
            if (g == "sqrt-budget") o.gain = GainVariant::sqrt_budget;
            else if (g == "as-printed") o.gain = GainVariant::as_printed;
            else throw ConfigError("online.gain: expected \"sqrt-budget\" or \"as-printed\", got \"" + g + "\"");
        }
        if (of.has("fusion")) {
            const std::string g = of.string("fusion");
            if (g == "previous") o.fusion = FusionIndex::previous;
            else if (g == "current") o.fusion = FusionIndex::current;
            else throw ConfigError("online.fusion: expected \"previous\" or \"current\", got \"" + g + "\"");
        }
        of.finish();
        wrap("online", [&] { o.validate(); return 0; });
    }
    if (f.has("initial")) {
        const json& iv = f.get("initial");
        if (!iv.is_array()) throw ConfigError("initial: expected an array of per-sensor vectors");
        for (std::size_t i = 0; i < iv.size(); ++i) {
            spec.initial.push_back(to_vector(iv[i], "initial[" + std::to_string(i) + "]"));
        }
    }

    if (f.has("budgets")) spec.budgets = to_list(f.get("budgets"), "budgets");
    if (f.has("agent_values")) spec.agent_values = to_list(f.get("agent_values"), "agent_values");
    spec.inject_noise = f.boolean("inject_noise", spec.inject_noise);
    f.finish();

    wrap("scenario", [&] { spec.validate(); return 0; });
    return spec;
}

ExperimentSpec load_scenario(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_scenario_json(text, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string scenario_to_json(const ExperimentSpec& spec) {
    json j;
    j["scenario"] = std::string(to_string(spec.scenario));
    j["seed"] = spec.seed;
    j["reps"] = spec.reps;
    j["sigma_w"] = spec.sigma_w;
    j["iterations"] = spec.iterations;
    j["theta"] = vector_json(spec.theta);
    if (const auto* u = std::get_if<UniformMatrixSpec>(&spec.H)) {
        j["H"] = {{"uniform", {{"low", u->low}, {"high", u->high}, {"rows", u->rows}, {"cols", u->cols}, {"seed", u->seed}}}};
    } else {
        j["H"] = matrix_json(std::get<Matrix>(spec.H));
    }
    j["rows_per_sensor"] = spec.rows_per_sensor;
    j["grid"] = spec.grid;
    json ms = json::array();
    for (const auto& d : spec.mechanisms) {
        ms.push_back({{"kind", std::string(to_string(d.kind))}, {"budget_s", d.budget_s}, {"tau", d.tau}});
    }
    j["mechanisms"] = ms;
    j["twin"] = {{"margin", spec.twin_margin}, {"center", spec.twin_center}};
    json edges = json::array();
    for (const auto& [a, b] : spec.graph.edges) edges.push_back({a, b});
    j["graph"] = {{"n", spec.graph.n}, {"edges", edges}};
    j["budget_s"] = spec.budget_s;
    json algs = json::array();
    for (auto a : spec.algorithms) algs.push_back(std::string(to_string(a)));
    j["algorithms"] = algs;
    j["online"] = {{"tau", spec.online.tau},
                   {"b", spec.online.b},
                   {"k0", spec.online.k0},
                   {"zeta", spec.online.zeta},
                   {"gain", std::string(gain_name(spec.online.gain))},
                   {"fusion", std::string(fusion_name(spec.online.fusion))}};
    json init = json::array();
    for (const auto& v : spec.initial) init.push_back(vector_json(v));
    j["initial"] = init;
    j["budgets"] = spec.budgets;
    j["agent_values"] = spec.agent_values;
    j["inject_noise"] = spec.inject_noise;
    return j.dump();
}

std::string spec_content_hash(const ExperimentSpec& spec) {
    const std::string body = scenario_to_json(spec);
    const std::string framed = "blob " + std::to_string(body.size()) + '\0' + body;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(framed.data()), framed.size(), digest);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned char c : digest) {
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 15]);
    }
    return out;
}

BoundQuery parse_bound_json(const std::string& text) {
    const json root = parse_text(text, "bound query");
    BoundQuery q;
    if (root.is_object() && root.contains("sensors")) {
        Fields f(root, "");
        const json& ss = f.get("sensors");
        if (!ss.is_array() || ss.empty()) throw ConfigError("sensors: expected a non-empty array");
        for (std::size_t i = 0; i < ss.size(); ++i) q.blocks.push_back(block_from(ss[i], "sensors[" + std::to_string(i) + "]"));
        f.finish();
        const Eigen::Index n = q.blocks.front().H.cols();
        for (std::size_t i = 0; i < q.blocks.size(); ++i) {
            if (q.blocks[i].H.cols() != n) {
                throw ConfigError("sensors[" + std::to_string(i) + "].H: column count differs from sensors[0]");
            }
        }
    } else {
        q.blocks.push_back(block_from(root, ""));
    }
    return q;
}

BoundQuery load_bound_query(const std::filesystem::path& path) {
    try {
        return parse_bound_json(read_text_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

double BoundAnswer::trace() const {
    return sigma_ppcr ? sigma_ppcr->matrix().trace() : std::numeric_limits<double>::infinity();
}

BoundAnswer evaluate_bound(const BoundQuery& q) {
    BoundAnswer a;
    a.pp_fisher = pp_fisher_additive(q.blocks);
    a.identifiable = joint_identifiable(q.blocks);
    if (a.identifiable) {
        try {
            a.sigma_ppcr = PsdMatrix(robust_inverse(a.pp_fisher.sym()));
        } catch (const NotIdentifiable&) {
            a.identifiable = false;
        }
    }
    return a;
}

std::string bound_to_json(const BoundAnswer& a) {
    json j;
    j["identifiable"] = a.identifiable;
    j["pp_fisher"] = matrix_json(a.pp_fisher.matrix());
    if (a.sigma_ppcr) {
        j["sigma_ppcr"] = matrix_json(a.sigma_ppcr->matrix());
        j["trace"] = a.trace();
    } else {
        j["trace"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace ppcr
