#include "ppcr/report.hpp"

#include "ppcr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace ppcr {

namespace {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }
std::string std_error_text(double se) { return se < 0.0 ? std::string() : format_number(se); }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, bool logx, bool logy) {
    constexpr double W = 720, Hh = 460, L = 80, R = 190, T = 40, B = 60;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            if ((logx && !(x > 0)) || (logy && !(y > 0)) || !std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, tx(x));
            x1 = std::max(x1, tx(x));
            y0 = std::min(y0, ty(y));
            y1 = std::max(y1, ty(y));
        }
    }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return Hh - B - (ty(y) - y0) / (y1 - y0) * (Hh - T - B); };

    std::ostringstream o;
    char buf[128];
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << Hh - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0;
        const double fy = y0 + (y1 - y0) * i / 4.0;
        const double vx = logx ? std::pow(10.0, fx) : fx;
        const double vy = logy ? std::pow(10.0, fy) : fy;
        std::snprintf(buf, sizeof buf, "%.3g", vx);
        o << "<text x=\"" << px(vx) << "\" y=\"" << Hh - B + 18 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.3g", vy);
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << Hh - 16 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
      << "</text>\n";
    o << "<text x=\"18\" y=\"" << (T + Hh - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + Hh - B) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kPalette[s % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.6\""
          << (series[s].dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (auto [x, y] : series[s].points) {
            if ((logx && !(x > 0)) || (logy && !(y > 0)) || !std::isfinite(x) || !std::isfinite(y)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
            o << buf;
        }
        o << "\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(s);
        o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 36 << "\" y2=\"" << ly - 4
          << "\" stroke=\"" << colour << "\" stroke-width=\"2\"" << (series[s].dashed ? " stroke-dasharray=\"6 4\"" : "")
          << "/>\n";
        o << "<text x=\"" << W - R + 42 << "\" y=\"" << ly << "\">" << xml_escape(series[s].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<std::string> algorithms_of(const RunResult& r) {
    std::vector<std::string> out;
    for (const auto& row : r.trajectory) {
        if (std::find(out.begin(), out.end(), row.algorithm) == out.end()) out.push_back(row.algorithm);
    }
    return out;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<CsvTable> csv_tables(const RunResult& r) {
    std::vector<CsvTable> out;
    switch (r.scenario) {
        case Scenario::mech_sweep: {
            std::string t = "mechanism,s,mse,stderr,ppcr_trace\n";
            for (const auto& row : r.sweep) {
                t += row.mechanism + "," + format_number(row.s) + "," + optional_number(row.mse) + "," +
                     std_error_text(row.std_error) + "," + format_number(row.ppcr_trace) + "\n";
            }
            out.push_back({"", std::move(t)});
            break;
        }
        case Scenario::offline:
        case Scenario::online: {
            for (const auto& alg : algorithms_of(r)) {
                std::string t = "k,sensor,mse,stderr,bound\n";
                for (const auto& row : r.trajectory) {
                    if (row.algorithm != alg) continue;
                    t += std::to_string(row.k) + "," + (row.sensor < 0 ? std::string("mean") : std::to_string(row.sensor)) +
                         "," + optional_number(row.mse) + "," + std_error_text(row.std_error) + "," +
                         format_number(row.bound) + "\n";
                }
                out.push_back({"_" + alg, std::move(t)});
            }
            break;
        }
        case Scenario::consensus: {
            std::string t = "reps,variance,stderr,bound\n";
            for (const auto& row : r.consensus) {
                t += std::to_string(row.reps) + "," + format_number(row.variance) + "," +
                     std_error_text(row.std_error) + "," + format_number(row.bound) + "\n";
            }
            out.push_back({"", std::move(t)});
            break;
        }
    }
    return out;
}

std::string svg_plot(const RunResult& r, const std::string& suffix) {
    std::vector<Series> series;
    switch (r.scenario) {
        case Scenario::mech_sweep: {
            std::map<std::string, std::size_t> index;
            Series bound{"PPCR trace", {}, true};
            for (const auto& row : r.sweep) {
                if (!index.count(row.mechanism)) {
                    index[row.mechanism] = series.size();
                    series.push_back({row.mechanism, {}, false});
                }
                if (row.mse) series[index[row.mechanism]].points.emplace_back(row.s, *row.mse);
            }
            for (const auto& row : r.sweep) {
                if (row.mechanism == r.sweep.front().mechanism) bound.points.emplace_back(row.s, row.ppcr_trace);
            }
            series.push_back(std::move(bound));
            return line_plot(series, "MSE vs privacy budget", "s", "MSE", true, true);
        }
        case Scenario::offline:
        case Scenario::online: {
            const std::string alg = suffix.empty() ? std::string() : suffix.substr(1);
            const bool online = r.scenario == Scenario::online;
            Series mean{"sensor mean", {}, false};
            Series bound{online ? "asymptote / k" : "PPCR trace", {}, true};
            for (const auto& row : r.trajectory) {
                if (row.algorithm != alg || row.sensor >= 0) continue;
                if (row.mse) mean.points.emplace_back(row.k, *row.mse);
                bound.points.emplace_back(row.k, row.bound);
            }
            series.push_back(std::move(mean));
            series.push_back(std::move(bound));
            return line_plot(series, alg + (online ? ": online MSE" : ": offline MSE"), "k", "MSE", online, true);
        }
        case Scenario::consensus: {
            Series v{"variance", {}, false};
            Series bound{"bound", {}, true};
            for (const auto& row : r.consensus) {
                v.points.emplace_back(static_cast<double>(row.reps), row.variance);
                bound.points.emplace_back(static_cast<double>(row.reps), row.bound);
            }
            series.push_back(std::move(v));
            series.push_back(std::move(bound));
            return line_plot(series, "private consensus variance", "reps", "variance", true, false);
        }
    }
    return {};
}

std::vector<std::filesystem::path> write_outputs(const RunResult& r, const std::filesystem::path& dir,
                                                 const std::string& stem, bool svg) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error(dir.string() + ": cannot create output directory (" + ec.message() + ")");
    std::vector<std::filesystem::path> paths;
    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error(p.string() + ": cannot open for writing");
        f << text;
        if (!f.flush()) throw std::runtime_error(p.string() + ": write failed");
        paths.push_back(p);
    };
    for (const auto& t : csv_tables(r)) {
        write(dir / (stem + t.suffix + ".csv"), t.text);
        if (svg) write(dir / (stem + t.suffix + ".svg"), svg_plot(r, t.suffix));
    }
    return paths;
}

std::vector<std::string> dominance_violations(const RunResult& r) {
    std::vector<std::string> out;
    auto beats = [](double value, double se, double bound) { return value < bound - 3.0 * std::max(se, 0.0); };
    switch (r.scenario) {
        case Scenario::mech_sweep:
            for (const auto& row : r.sweep) {
                if (row.mse && beats(*row.mse, row.std_error, row.ppcr_trace)) {
                    out.push_back(row.mechanism + " at s=" + format_number(row.s) + ": mse " + format_number(*row.mse) +
                                  " < trace " + format_number(row.ppcr_trace));
                }
            }
            break;
        case Scenario::offline:
        case Scenario::online:
            for (const auto& alg : algorithms_of(r)) {
                const TrajectoryRow* last = nullptr;
                for (const auto& row : r.trajectory) {
                    if (row.algorithm == alg && row.sensor < 0) last = &row;
                }
                if (last && last->mse && beats(*last->mse, last->std_error, last->bound)) {
                    out.push_back(alg + " at k=" + std::to_string(last->k) + ": mse " + format_number(*last->mse) +
                                  " < bound " + format_number(last->bound));
                }
            }
            break;
        case Scenario::consensus:
            if (!r.consensus.empty()) {
                const auto& row = r.consensus.back();
                if (beats(row.variance, row.std_error, row.bound)) {
                    out.push_back("consensus variance " + format_number(row.variance) + " < bound " +
                                  format_number(row.bound));
                }
            }
            break;
    }
    return out;
}

void print_summary(const RunResult& r, std::ostream& out) {
    out << "scenario " << to_string(r.scenario) << "  seed " << r.seed << "  reps " << r.reps << "  spec "
        << r.spec_hash.substr(0, 12) << "\n";
    for (const auto& e : r.events) out << "  event: " << e << "\n";
    switch (r.scenario) {
        case Scenario::mech_sweep: {
            out << "  mechanism            points  infeasible  min mse/trace  max mse/trace\n";
            std::vector<std::string> order;
            std::map<std::string, std::tuple<int, int, double, double>> agg;
            for (const auto& row : r.sweep) {
                if (!agg.count(row.mechanism)) {
                    order.push_back(row.mechanism);
                    agg[row.mechanism] = {0, 0, std::numeric_limits<double>::infinity(), 0.0};
                }
                auto& [n, bad, lo, hi] = agg[row.mechanism];
                ++n;
                if (!row.mse) {
                    ++bad;
                    continue;
                }
                const double ratio = *row.mse / row.ppcr_trace;
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            for (const auto& m : order) {
                const auto& [n, bad, lo, hi] = agg[m];
                char buf[160];
                std::snprintf(buf, sizeof buf, "  %-20s %6d  %10d  %13.4g  %13.4g\n", m.c_str(), n, bad,
                              n > bad ? lo : std::nan(""), n > bad ? hi : std::nan(""));
                out << buf;
            }
            break;
        }
        case Scenario::offline:
        case Scenario::online: {
            const bool online = r.scenario == Scenario::online;
            out << (online ? "  algorithm          k     k*mse      asymptote  ratio\n"
                           : "  algorithm          k     mse        bound      ratio\n");
            for (const auto& alg : algorithms_of(r)) {
                const TrajectoryRow* last = nullptr;
                for (const auto& row : r.trajectory) {
                    if (row.algorithm == alg && row.sensor < 0) last = &row;
                }
                if (!last || !last->mse) continue;
                const double scale = online ? last->k : 1.0;
                const double bound = online ? r.asymptote : last->bound;
                char buf[160];
                std::snprintf(buf, sizeof buf, "  %-16s %6d  %-10s %-10s %.4f\n", alg.c_str(), last->k,
                              fmt("%.5g", *last->mse * scale).c_str(), fmt("%.5g", bound).c_str(),
                              *last->mse * scale / bound);
                out << buf;
            }
            if (!online) {
                out << "  centralized mse " << format_number(r.central_mse) << " (se "
                    << format_number(r.central_std_error) << "), bound " << format_number(r.central_bound)
                    << ", max sensor deviation " << fmt("%.3g", r.max_central_deviation) << "\n";
            }
            break;
        }
        case Scenario::consensus: {
            if (!r.consensus.empty()) {
                const auto& row = r.consensus.back();
                out << "  variance " << format_number(row.variance) << " (se " << format_number(row.std_error)
                    << "), bound " << format_number(row.bound) << "\n";
            }
            break;
        }
    }
    const auto v = dominance_violations(r);
    if (v.empty()) {
        out << "  dominance: no estimate beats its bound by more than 3 std-errors\n";
    } else {
        out << "  dominance violations: " << v.size() << "\n";
        for (const auto& s : v) out << "    " << s << "\n";
    }
}

}  // namespace ppcr
