#include "qvi/runio.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qvi {

namespace {

using nlohmann::json;

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64LE = 1;
constexpr std::size_t kMaxDims = 5;

void put_u32(char* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
void put_u64(char* p, std::uint64_t v) { std::memcpy(p, &v, 8); }
std::uint32_t get_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}
std::uint64_t get_u64(const char* p) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    return v;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("short write: " + path);
}

std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_qvif(const std::string& path, const QvifData& data) {
    if (data.dims.empty() || data.dims.size() > kMaxDims)
        throw Error("qvif: need 1.." + std::to_string(kMaxDims) + " dims");
    std::uint64_t count = 1;
    for (auto d : data.dims) count *= d;
    if (count != data.values.size())
        throw Error("qvif: dims do not match payload size");

    std::string buf(64, '\0');
    std::memcpy(buf.data(), "QVIF", 4);
    put_u32(buf.data() + 4, kVersion);
    put_u32(buf.data() + 8, kDtypeF64LE);
    put_u32(buf.data() + 12, static_cast<std::uint32_t>(data.dims.size()));
    for (std::size_t i = 0; i < data.dims.size(); ++i)
        put_u64(buf.data() + 16 + 8 * i, data.dims[i]);
    put_u64(buf.data() + 56, count);

    buf.resize(64 + 8 * count);
    std::memcpy(buf.data() + 64, data.values.data(), 8 * count);
    write_all(path, buf);
}

QvifData read_qvif(const std::string& path) {
    std::string buf = read_all(path);
    if (buf.size() < 64 || std::memcmp(buf.data(), "QVIF", 4) != 0)
        throw Error("qvif: bad magic or truncated header in " + path);
    if (get_u32(buf.data() + 4) != kVersion)
        throw Error("qvif: unsupported version in " + path);
    if (get_u32(buf.data() + 8) != kDtypeF64LE)
        throw Error("qvif: unsupported dtype in " + path);
    std::uint32_t nd = get_u32(buf.data() + 12);
    if (nd == 0 || nd > kMaxDims) throw Error("qvif: bad ndims in " + path);

    QvifData out;
    std::uint64_t prod = 1;
    for (std::uint32_t i = 0; i < nd; ++i) {
        out.dims.push_back(get_u64(buf.data() + 16 + 8 * i));
        prod *= out.dims.back();
    }
    std::uint64_t count = get_u64(buf.data() + 56);
    if (count != prod || buf.size() != 64 + 8 * count)
        throw Error("qvif: payload size mismatch in " + path);
    out.values.resize(count);
    std::memcpy(out.values.data(), buf.data() + 64, 8 * count);
    return out;
}

std::uint64_t file_checksum(const std::string& path) {
    return fnv1a(read_all(path));
}

namespace {

std::string value_csv(const Grid& grid, const SolveResult& result) {
    std::ostringstream os;
    os << "t";
    for (int a = 0; a < grid.dim(); ++a) os << ",x" << (a + 1);
    os << ",value\n";
    for (std::size_t l = 0; l < result.levels.size(); ++l) {
        double t = grid.times.empty() ? 0.0 : grid.times[l];
        for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
            Vec x = grid.point(i);
            os << fmt_g17(t);
            for (int a = 0; a < grid.dim(); ++a) os << ',' << fmt_g17(x[a]);
            os << ',' << fmt_g17(result.levels[l][i]) << '\n';
        }
    }
    return os.str();
}

std::string policy_csv(const Grid& grid, const SolveResult& result) {
    std::ostringstream os;
    os << "level,node,region,beta_index";
    // Impulse column dimension = state dimension of the zeta vectors.
    int dz = 0;
    for (const auto& pol : result.policies)
        for (const auto& z : pol.zeta)
            dz = std::max(dz, static_cast<int>(z.size()));
    for (int a = 0; a < dz; ++a) os << ",zeta" << (a + 1);
    os << '\n';
    for (std::size_t l = 0; l < result.policies.size(); ++l) {
        const Policy& pol = result.policies[l];
        for (std::size_t i = 0; i < pol.region.size(); ++i) {
            os << l << ',' << i << ',' << static_cast<int>(pol.region[i])
               << ',' << pol.beta_index[i];
            const Vec& z = pol.zeta[i];
            for (int a = 0; a < dz; ++a)
                os << ',' << (a < z.size() ? fmt_g17(z[a]) : "");
            os << '\n';
        }
    }
    return os.str();
}

std::string report_json(const SolveResult& result) {
    json rep;
    rep["pb_constant"] = result.pb_constant;
    rep["levels"] = json::array();
    for (std::size_t l = 0; l < result.certificates.size(); ++l) {
        const auto& c = result.certificates[l];
        rep["levels"].push_back({{"level", l},
                                 {"residual", c.residual},
                                 {"min_u_minus_Mu", c.min_u_minus_Mu},
                                 {"iterations", c.iterations}});
    }
    return rep.dump(2) + "\n";
}

}  // namespace

void save_run(const std::string& run_dir, const LoadedConfig& config,
              const Grid& grid, const SolveResult& result,
              double wall_seconds) {
    namespace fs = std::filesystem;
    fs::create_directories(run_dir);
    auto at = [&](const char* name) { return (fs::path(run_dir) / name).string(); };

    write_all(at("config.ini"), config.canonical);

    QvifData q;
    q.dims.push_back(result.levels.size());
    for (const auto& axis : grid.axes) q.dims.push_back(axis.size());
    for (const auto& lvl : result.levels)
        q.values.insert(q.values.end(), lvl.v.begin(), lvl.v.end());
    write_qvif(at("value.qvif"), q);

    write_all(at("value.csv"), value_csv(grid, result));
    write_all(at("policy.csv"), policy_csv(grid, result));
    write_all(at("report.json"), report_json(result));

    RunManifest m;
    m.config_hash = config.hash;
    m.grid_nodes = config.grid_nodes;
    m.n_time = config.n_time;
    m.tol = config.options.tol;
    m.seed = config.seed;
    m.wall_seconds = wall_seconds;
    for (const char* name :
         {"config.ini", "value.qvif", "value.csv", "policy.csv", "report.json"})
        m.checksums[name] = file_checksum(at(name));

    json j;
    j["config_hash"] = m.config_hash;
    j["grid_nodes"] = m.grid_nodes;
    j["n_time"] = m.n_time;
    j["tol"] = m.tol;
    j["seed"] = m.seed;
    j["wall_seconds"] = m.wall_seconds;
    j["checksums"] = m.checksums;
    write_all(at("manifest.json"), j.dump(2) + "\n");
}

RunDir load_run(const std::string& run_dir, const LoadedConfig& config) {
    namespace fs = std::filesystem;
    auto at = [&](const char* name) { return (fs::path(run_dir) / name).string(); };

    RunDir run;
    run.path = run_dir;

    json j = json::parse(read_all(at("manifest.json")));
    RunManifest& m = run.manifest;
    m.config_hash = j.at("config_hash").get<std::uint64_t>();
    m.grid_nodes = j.at("grid_nodes").get<std::vector<int>>();
    m.n_time = j.at("n_time").get<int>();
    m.tol = j.at("tol").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    for (auto& [name, sum] : j.at("checksums").items()) {
        std::uint64_t expect = sum.get<std::uint64_t>();
        m.checksums[name] = expect;
        std::uint64_t got = file_checksum(at(name.c_str()));
        if (got != expect)
            throw Error("checksum mismatch for " + name + " in " + run_dir);
    }
    if (m.config_hash != config.hash)
        throw Error("run " + run_dir + " was produced by a different config");

    run.grid = make_grid(config.problem, m.grid_nodes, m.n_time);

    QvifData q = read_qvif(at("value.qvif"));
    std::size_t n_levels = q.dims.at(0);
    std::size_t n_nodes = q.values.size() / std::max<std::size_t>(1, n_levels);
    if (n_nodes != run.grid.num_nodes())
        throw Error("value grid in " + run_dir + " does not match the grid spec");
    for (std::size_t l = 0; l < n_levels; ++l) {
        ValueField u;
        u.v.assign(q.values.begin() + static_cast<std::ptrdiff_t>(l * n_nodes),
                   q.values.begin() + static_cast<std::ptrdiff_t>((l + 1) * n_nodes));
        run.result.levels.push_back(std::move(u));
    }

    // Policies.
    {
        std::istringstream in(read_all(at("policy.csv")));
        std::string line;
        std::getline(in, line);  // header
        run.result.policies.assign(
            n_levels, Policy{std::vector<Region>(n_nodes, Region::Continuation),
                             std::vector<int>(n_nodes, 0),
                             std::vector<Vec>(n_nodes)});
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            std::size_t l = std::stoul(cells.at(0));
            std::size_t i = std::stoul(cells.at(1));
            Policy& pol = run.result.policies.at(l);
            pol.region.at(i) = static_cast<Region>(std::stoi(cells.at(2)));
            pol.beta_index.at(i) = std::stoi(cells.at(3));
            std::vector<double> z;
            for (std::size_t c = 4; c < cells.size(); ++c)
                if (!cells[c].empty()) z.push_back(std::stod(cells[c]));
            if (!z.empty())
                pol.zeta.at(i) =
                    Eigen::Map<Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
        }
    }

    // Certificates from the report.
    {
        json rep = json::parse(read_all(at("report.json")));
        run.result.pb_constant = rep.at("pb_constant").get<double>();
        for (const auto& lv : rep.at("levels")) {
            LevelCertificate c;
            c.residual = lv.at("residual").get<double>();
            c.min_u_minus_Mu = lv.at("min_u_minus_Mu").get<double>();
            c.iterations = lv.at("iterations").get<int>();
            run.result.certificates.push_back(c);
        }
    }

    return run;
}

}  // namespace qvi
