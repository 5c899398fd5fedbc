#include "drpets/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "drpets/errors.hpp"
#include "drpets/textio.hpp"

namespace drpets {

std::string format_csv(std::span<const SweepRow> rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const SweepRow& r : rows) {
        out += format_double(r.param) + ',' + format_double(r.mean_reward) + ',' +
               format_double(r.stderr_reward) + ',' + std::to_string(r.n_seeds) + ',' +
               std::string(to_string(r.algorithm)) + ',' + format_double(r.epsilon) + ',' +
               std::string(to_string(r.p)) + '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!line.empty() && line.back() == sep) parts.emplace_back();
    return parts;
}

std::size_t parse_count(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw InvalidInput("bad seed count '" + s + "'");
    return std::stoull(s);
}

}  // namespace

std::vector<SweepRow> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw InvalidInput("unexpected CSV header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 7) throw InvalidInput("CSV line needs 7 fields: " + line);
        SweepRow r;
        r.param = parse_double(f[0]);
        r.mean_reward = parse_double(f[1]);
        r.stderr_reward = parse_double(f[2]);
        r.n_seeds = parse_count(f[3]);
        r.algorithm = parse_algorithm(f[4]);
        r.epsilon = parse_double(f[5]);
        r.p = parse_p_norm(f[6]);
        r.single_seed = r.n_seeds < 2;
        rows.push_back(r);
    }
    return rows;
}

namespace {

struct Series {
    std::string label;
    std::string color;
    std::vector<const SweepRow*> rows;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string render_svg(std::span<const SweepRow> rows, const std::string& x_label) {
    if (rows.empty()) throw InvalidInput("nothing to plot");

    std::map<std::tuple<int, double, int>, Series> groups;
    for (const SweepRow& r : rows) {
        auto key = std::make_tuple(static_cast<int>(r.algorithm), r.epsilon, static_cast<int>(r.p));
        Series& s = groups[key];
        if (s.rows.empty()) {
            s.label = std::string(to_string(r.algorithm));
            if (r.algorithm == Algorithm::DrPets)
                s.label += " eps=" + format_double(r.epsilon) + " p=" + std::string(to_string(r.p));
        }
        s.rows.push_back(&r);
    }
    const char* pets_colors[] = {"#1f5fbf", "#4f8fdf", "#0f2f7f"};
    const char* dr_colors[] = {"#c8281e", "#e8782e", "#8f1010", "#d04890"};
    int n_pets = 0, n_dr = 0;
    for (auto& [key, s] : groups) {
        std::sort(s.rows.begin(), s.rows.end(),
                  [](const SweepRow* a, const SweepRow* b) { return a->param < b->param; });
        s.color = std::get<0>(key) == static_cast<int>(Algorithm::Pets) ? pets_colors[n_pets++ % 3]
                                                                          : dr_colors[n_dr++ % 4];
    }

    double x0 = rows[0].param, x1 = x0, y0 = rows[0].mean_reward, y1 = y0;
    for (const SweepRow& r : rows) {
        x0 = std::min(x0, r.param);
        x1 = std::max(x1, r.param);
        y0 = std::min(y0, r.mean_reward - 0.5 * r.stderr_reward);
        y1 = std::max(y1, r.mean_reward + 0.5 * r.stderr_reward);
    }
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 1.0; y1 += 1.0; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double W = 640, H = 420, L = 80, R = 180, T = 20, Bm = 50;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - Bm - (y - y0) / (y1 - y0) * (H - T - Bm); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - Bm
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - Bm + 16
           << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4)
           << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
       << esc(x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - Bm) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (T + H - Bm) / 2 << ")\">total episode reward</text>\n";

    int legend = 0;
    for (const auto& [key, s] : groups) {
        std::string upper, lower;
        for (const SweepRow* r : s.rows)
            upper += fmt(px(r->param)) + "," + fmt(py(r->mean_reward + 0.5 * r->stderr_reward)) + " ";
        for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it)
            lower += fmt(px((*it)->param)) + "," +
                     fmt(py((*it)->mean_reward - 0.5 * (*it)->stderr_reward)) + " ";
        os << "<polygon class=\"band\" points=\"" << upper << lower << "\" fill=\"" << s.color
           << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        std::string line;
        for (const SweepRow* r : s.rows) line += fmt(px(r->param)) + "," + fmt(py(r->mean_reward)) + " ";
        os << "<polyline class=\"series\" points=\"" << line << "\" fill=\"none\" stroke=\""
           << s.color << "\" stroke-width=\"2\"/>\n";
        const double ly = T + 10 + 18 * legend++;
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30
           << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << esc(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string format_episode_log(const SweepResult& result) {
    std::string out;
    for (const EpisodeOutcome& e : result.episodes) {
        nlohmann::ordered_json j;
        j["kind"] = "episode";
        j["param"] = e.param;
        j["seed_index"] = e.seed_index;
        j["seed"] = e.seed;
        j["total_reward"] = e.ok ? nlohmann::ordered_json(e.total_reward) : nlohmann::ordered_json();
        j["status"] = e.status;
        out += j.dump() + '\n';
    }
    for (const SweepRow& r : result.rows) {
        std::size_t failed = 0;
        for (const EpisodeOutcome& e : result.episodes)
            if (e.param == r.param && !e.ok) ++failed;
        nlohmann::ordered_json j;
        j["kind"] = "point";
        j["param"] = r.param;
        j["algorithm"] = to_string(r.algorithm);
        j["epsilon"] = r.epsilon;
        j["p"] = to_string(r.p);
        j["n_ok"] = r.n_seeds;
        j["n_failed"] = failed;
        j["single_seed"] = r.single_seed;
        out += j.dump() + '\n';
    }
    return out;
}

void export_result(std::span<const SweepRow> rows, const std::string& csv_path,
                   const std::string& svg_path, const std::string& x_label) {
    if (rows.empty()) throw InvalidInput("empty sweep result");
    write_file(csv_path, format_csv(rows));
    if (!svg_path.empty()) write_file(svg_path, render_svg(rows, x_label));
}

}  // namespace drpets
