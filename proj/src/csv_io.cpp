#include "fprom/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fprom/error.hpp"

namespace fprom::io {

namespace {

std::string location(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw_input("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_input("cannot write " + path.string());
    return out;
}

void expect_header(std::istream& in, const std::filesystem::path& path, std::string_view header) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != header) {
        throw_input(location(path, 1) + ": expected header '" + std::string(header) + "'");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& where) {
    text = trim(text);
    double v = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw_input(where + ": cannot parse number '" + std::string(text) + "'");
    }
    if (!std::isfinite(v)) throw_input(where + ": non-finite value '" + std::string(text) + "'");
    return v;
}

void write_density_csv(const std::filesystem::path& path, const DensityField& f) {
    auto out = open_output(path);
    out << "x,f\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        out << format_double(f.grid().node(i)) << ',' << format_double(f[i]) << '\n';
    }
    if (!out) throw_input("failed writing " + path.string());
}

DensityField read_density_csv(const std::filesystem::path& path, double time_stamp) {
    auto in = open_input(path);
    expect_header(in, path, "x,f");
    std::vector<double> xs, fs;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        const auto where = location(path, line_no);
        if (fields.size() != 2) throw_input(where + ": expected 2 fields, got " + std::to_string(fields.size()));
        xs.push_back(parse_double(fields[0], where));
        const double f = parse_double(fields[1], where);
        if (f < 0.0) throw_input(where + ": negative density value");
        fs.push_back(f);
    }
    if (xs.size() < Grid::min_points) throw_input(path.string() + ": too few grid points");
    if (!(xs.front() < xs.back())) throw_input(path.string() + ": x column must increase");
    const auto grid = Grid::uniform(xs.front(), xs.back(), xs.size());
    const double tol = 1e-9 * (grid.x_max() - grid.x_min());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::abs(xs[i] - grid.node(i)) > tol) {
            throw_input(location(path, i + 2) + ": x column is not a uniform grid");
        }
    }
    return DensityField(grid, std::move(fs), time_stamp);
}

void write_ensemble_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens) {
    auto out = open_output(path);
    out << "traj_id,t,x\n";
    std::vector<std::string> times(ens.n_times());
    for (std::size_t k = 0; k < ens.n_times(); ++k) times[k] = format_double(ens.times()[k]);
    for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
        for (std::size_t k = 0; k < ens.n_times(); ++k) {
            out << r << ',' << times[k] << ',' << format_double(ens.at(r, k)) << '\n';
        }
    }
    if (!out) throw_input("failed writing " + path.string());
}

TrajectoryEnsemble read_ensemble_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    expect_header(in, path, "traj_id,t,x");
    std::map<long long, std::vector<std::pair<double, double>>> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        const auto where = location(path, line_no);
        if (fields.size() != 3) throw_input(where + ": expected 3 fields, got " + std::to_string(fields.size()));
        const auto id_text = trim(fields[0]);
        long long id = 0;
        const auto res = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
        if (res.ec != std::errc() || res.ptr != id_text.data() + id_text.size()) {
            throw_input(where + ": cannot parse trajectory id '" + std::string(id_text) + "'");
        }
        rows[id].emplace_back(parse_double(fields[1], where), parse_double(fields[2], where));
    }
    if (rows.empty()) throw_input(path.string() + ": no ensemble rows");

    std::vector<double> times;
    for (const auto& [t, x] : rows.begin()->second) times.push_back(t);
    std::sort(times.begin(), times.end());
    if (std::adjacent_find(times.begin(), times.end()) != times.end()) {
        throw_input(path.string() + ": duplicate time in trajectory " + std::to_string(rows.begin()->first));
    }

    std::vector<double> samples;
    samples.reserve(rows.size() * times.size());
    for (auto& [id, series] : rows) {
        std::sort(series.begin(), series.end());
        if (series.size() != times.size()) {
            throw_input(path.string() + ": trajectory " + std::to_string(id) + " has " +
                        std::to_string(series.size()) + " rows, expected " + std::to_string(times.size()));
        }
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (series[k].first != times[k]) {
                throw_input(path.string() + ": trajectory " + std::to_string(id) + " is sampled on a different time axis");
            }
            samples.push_back(series[k].second);
        }
    }
    try {
        return TrajectoryEnsemble(std::move(times), rows.size(), std::move(samples), {}, AxisCheck::increasing);
    } catch (const Error& e) {
        throw Error(ErrorKind::input, path.string() + ": " + e.what());
    }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    auto in = open_input(path);
    const auto base = path.parent_path();
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        if (line_no == 1 && text == "time,path") continue;
        const auto comma = text.find(',');
        const auto where = location(path, line_no);
        if (comma == std::string_view::npos) throw_input(where + ": expected 'time,path'");
        ManifestEntry e;
        e.time = parse_double(text.substr(0, comma), where);
        std::filesystem::path p(std::string(trim(text.substr(comma + 1))));
        e.path = p.is_absolute() ? p : base / p;
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw_input(path.string() + ": manifest lists no densities");
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].time == entries[i - 1].time) throw_input(path.string() + ": duplicate manifest time");
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    auto out = open_output(path);
    out << "time,path\n";
    for (const auto& e : entries) out << format_double(e.time) << ',' << e.path.generic_string() << '\n';
    if (!out) throw_input("failed writing " + path.string());
}

std::vector<DensityField> read_density_list(const std::filesystem::path& manifest) {
    std::vector<DensityField> out;
    for (const auto& e : read_manifest(manifest)) out.push_back(read_density_csv(e.path, e.time));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    auto out = open_output(path);
    out << content;
    if (!out) throw_input("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace fprom::io
