#include "mixpersist/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <variant>

namespace mixpersist {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'X', 'P', 'B'};
constexpr std::uint64_t kMaxSpecBytes = 1 << 16;

enum class GridTag : std::uint32_t { Uniform = 0, LampertiLog = 1, Explicit = 2 };

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }

void get_bytes(std::istream& is, char* dst, std::size_t n) {
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw FormatError("container: truncated input");
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    get_bytes(is, reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    get_bytes(is, reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

struct Header {
    ContainerKind kind;
    std::string spec;
    TimeGrid grid;
    std::uint64_t rows;
    std::uint64_t cols;
    double jitter;
    SeedPolicy seed;
};

void put_grid(std::ostream& os, const TimeGrid& grid) {
    GridTag tag = GridTag::Explicit;
    double p0 = 0.0, p1 = 0.0;
    std::uint64_t n = 0;
    if (const auto* u = std::get_if<UniformPolicy>(&grid.policy())) {
        tag = GridTag::Uniform;
        p1 = u->t_max;
        n = u->n;
    } else if (const auto* l = std::get_if<LampertiLogPolicy>(&grid.policy())) {
        tag = GridTag::LampertiLog;
        p0 = l->t_min;
        p1 = l->t_max;
        n = l->n;
    }
    put_u32(os, static_cast<std::uint32_t>(tag));
    put_u32(os, grid.includes_origin() ? 1 : 0);
    put_f64(os, p0);
    put_f64(os, p1);
    put_u64(os, n);
    put_u64(os, grid.size());
    for (const double t : grid.times()) put_f64(os, t);
}

TimeGrid get_grid(std::istream& is) {
    const auto tag = get_u32(is);
    const auto origin = get_u32(is);
    const double p0 = get_f64(is);
    const double p1 = get_f64(is);
    const auto n = get_u64(is);
    const auto count = get_u64(is);
    if (origin > 1 || count == 0 || count > (1ULL << 28)) throw FormatError("container: bad grid header");
    std::vector<double> times(count);
    for (auto& t : times) t = get_f64(is);
    try {
        TimeGrid grid = [&] {
            switch (static_cast<GridTag>(tag)) {
                case GridTag::Uniform: return TimeGrid::uniform(p1, n, origin == 1);
                case GridTag::LampertiLog: return TimeGrid::lamperti_log(p0, p1, n, origin == 1);
                case GridTag::Explicit: return TimeGrid::explicit_times(times);
            }
            throw FormatError("container: unknown grid policy tag " + std::to_string(tag));
        }();
        if (grid.size() != count || !std::equal(times.begin(), times.end(), grid.times().begin())) {
            throw FormatError("container: stored times disagree with the grid policy");
        }
        return grid;
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("container: ") + e.what());
    }
}

void put_header(std::ostream& os, const Header& h) {
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, kContainerVersion);
    put_u32(os, static_cast<std::uint32_t>(h.kind));
    put_u32(os, static_cast<std::uint32_t>(h.spec.size()));
    os.write(h.spec.data(), static_cast<std::streamsize>(h.spec.size()));
    put_grid(os, h.grid);
    put_u64(os, h.rows);
    put_u64(os, h.cols);
    put_f64(os, h.jitter);
    put_u64(os, h.seed.master_seed);
    put_u64(os, h.seed.experiment_id);
    put_u64(os, h.seed.first_replicate);
}

Header get_header(std::istream& is, ContainerKind expected) {
    std::array<char, 4> magic{};
    get_bytes(is, magic.data(), magic.size());
    if (magic != kMagic) throw FormatError("container: bad magic");
    const auto version = get_u32(is);
    if (version != kContainerVersion) throw FormatError("container: unsupported version " + std::to_string(version));
    const auto kind = get_u32(is);
    if (kind != static_cast<std::uint32_t>(expected)) {
        throw FormatError("container: kind " + std::to_string(kind) + ", expected " +
                          std::to_string(static_cast<std::uint32_t>(expected)));
    }
    const auto len = get_u32(is);
    if (len > kMaxSpecBytes) throw FormatError("container: spec string too long");
    std::string spec(len, '\0');
    get_bytes(is, spec.data(), len);
    TimeGrid grid = get_grid(is);
    const auto rows = get_u64(is);
    const auto cols = get_u64(is);
    const double jitter = get_f64(is);
    SeedPolicy seed;
    seed.master_seed = get_u64(is);
    seed.experiment_id = get_u64(is);
    seed.first_replicate = get_u64(is);
    return {static_cast<ContainerKind>(kind), std::move(spec), std::move(grid), rows, cols, jitter, seed};
}

std::vector<double> get_payload(std::istream& is, std::uint64_t rows, std::uint64_t cols) {
    if (cols != 0 && rows > (1ULL << 40) / cols) throw FormatError("container: payload too large");
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = get_f64(is);
    return v;
}

void put_payload(std::ostream& os, const std::vector<double>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    } else {
        for (const double x : v) put_f64(os, x);
    }
}

std::ifstream open_input(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + file.string());
    return is;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& file, bool binary) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
    os.exceptions(std::ios::failbit | std::ios::badbit);
    return os;
}

void write_covariance(std::ostream& os, const CovarianceMatrix& cov) {
    const auto n = static_cast<std::uint64_t>(cov.size());
    if (cov.entries.size() != n * n) throw std::invalid_argument("write_covariance: entries do not match the grid");
    put_header(os, {ContainerKind::Covariance, cov.spec_descriptor, cov.grid, n, n, cov.jitter_applied, {}});
    put_payload(os, cov.entries);
}

void write_covariance(const std::filesystem::path& file, const CovarianceMatrix& cov) {
    auto os = open_output(file, true);
    write_covariance(os, cov);
}

CovarianceMatrix read_covariance(std::istream& is) {
    Header h = get_header(is, ContainerKind::Covariance);
    if (h.rows != h.grid.size() || h.cols != h.grid.size()) throw FormatError("container: matrix is not grid x grid");
    auto entries = get_payload(is, h.rows, h.cols);
    CovarianceMatrix cov{std::move(h.spec), std::move(h.grid), std::move(entries), 0.0, {}};
    certify_psd(cov);
    return cov;
}

CovarianceMatrix read_covariance(const std::filesystem::path& file) {
    auto is = open_input(file);
    return read_covariance(is);
}

void write_paths_binary(std::ostream& os, const PathBatch& batch) {
    const auto n = static_cast<std::uint64_t>(batch.grid.size());
    if (batch.values.size() != batch.n_paths * n) throw std::invalid_argument("write_paths_binary: bad batch shape");
    put_header(os, {ContainerKind::Paths, batch.spec.descriptor(), batch.grid, batch.n_paths, n, 0.0, batch.seed});
    put_payload(os, batch.values);
}

void write_paths_binary(const std::filesystem::path& file, const PathBatch& batch) {
    auto os = open_output(file, true);
    write_paths_binary(os, batch);
}

PathBatch read_paths_binary(std::istream& is) {
    Header h = get_header(is, ContainerKind::Paths);
    if (h.cols != h.grid.size()) throw FormatError("container: columns do not match the grid");
    ProcessSpec spec = [&] {
        try {
            return parse_spec(h.spec);
        } catch (const std::exception& e) {
            throw FormatError(std::string("container: ") + e.what());
        }
    }();
    auto values = get_payload(is, h.rows, h.cols);
    return {std::move(spec), std::move(h.grid), h.rows, std::move(values), h.seed, false};
}

PathBatch read_paths_binary(const std::filesystem::path& file) {
    auto is = open_input(file);
    return read_paths_binary(is);
}

void write_paths_csv(std::ostream& os, const PathBatch& batch) {
    const auto t = batch.grid.times();
    for (std::size_t i = 0; i < t.size(); ++i) os << (i ? "," : "") << format_double(t[i]);
    os << '\n';
    for (std::size_t r = 0; r < batch.n_paths; ++r) {
        const auto row = batch.row(r);
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << '\n';
    }
}

void write_persistence_csv(std::ostream& os, const std::vector<PersistenceEstimate>& estimates) {
    os << "T,p_hat,ci_low,ci_high,n_paths,grid_points_used\n";
    for (const auto& e : estimates) {
        os << format_double(e.T) << ',' << format_double(e.p_hat) << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
           << e.n_paths << ',' << e.grid_points_used << '\n';
    }
}

std::vector<PersistenceEstimate> read_persistence_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "T,p_hat,ci_low,ci_high,n_paths,grid_points_used") {
        throw FormatError("persistence csv: unexpected header");
    }
    std::vector<PersistenceEstimate> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            cells.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (cells.size() != 6) throw FormatError("persistence csv: line " + std::to_string(line_no) + ": need 6 cells");
        try {
            PersistenceEstimate e;
            e.T = std::stod(cells[0]);
            e.p_hat = std::stod(cells[1]);
            e.ci_low = std::stod(cells[2]);
            e.ci_high = std::stod(cells[3]);
            e.n_paths = std::stoull(cells[4]);
            e.grid_points_used = std::stoull(cells[5]);
            e.se = e.n_paths > 0 ? std::sqrt(std::max(0.0, e.p_hat * (1.0 - e.p_hat)) / static_cast<double>(e.n_paths))
                                 : 0.0;
            e.zero_count = !(e.p_hat > 0.0);
            out.push_back(e);
        } catch (const std::logic_error&) {
            throw FormatError("persistence csv: line " + std::to_string(line_no) + ": bad number");
        }
    }
    return out;
}

void write_fit_csv(std::ostream& os, const std::vector<FitRow>& rows) {
    os << "spec,theta_hat,stderr,intercept,r_squared,T_min,T_max,burn_in\n";
    for (const auto& r : rows) {
        // Descriptors contain commas.
        os << '"' << r.spec << "\"," << format_double(r.fit.theta_hat) << ',' << format_double(r.fit.std_error) << ','
           << format_double(r.fit.intercept) << ',' << format_double(r.fit.r_squared) << ',' << format_double(r.fit.T_min) << ','
           << format_double(r.fit.T_max) << ',' << r.fit.burn_in << '\n';
    }
}

void write_spectral_csv(std::ostream& os, const SpectralDensity& density) {
    os << "x,p\n";
    for (std::size_t i = 0; i < density.x.size(); ++i) os << format_double(density.x[i]) << ',' << format_double(density.p[i]) << '\n';
}

void write_h1_csv(std::ostream& os, double alpha, double x0, const std::vector<double>& taus) {
    os << "tau,scaled_h1\n";
    for (const double tau : taus) {
        os << format_double(tau) << ',' << format_double(h1_tilde(alpha, x0, tau) * std::pow(tau, 1.0 - alpha)) << '\n';
    }
}

}  // namespace mixpersist
