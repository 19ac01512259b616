#include "netlqr/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is.is_open()) throw ParameterError("cannot open " + path + " for reading");
    return is;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os.is_open()) throw ParameterError("cannot open " + path + " for writing");
    return os;
}

// Smallest k such that every block at distance > k is exactly zero.
int tight_class(const BlockLayout& lay, const Eigen::MatrixXd& data) {
    BlockMatrix m(lay, data);
    int k = 0;
    for (int i = 0; i < lay.n_agents(); ++i)
        for (int j = 0; j < lay.n_agents(); ++j)
            if (lay.dist(i, j) > k && m.block(i, j).cwiseAbs().maxCoeff() > 0.0)
                k = lay.dist(i, j);
    return k;
}

BlockMatrix load_block_matrix(const std::string& path, const BlockLayout& lay) {
    Eigen::MatrixXd m = load_matrix(path);
    if (m.rows() != lay.rows() || m.cols() != lay.cols())
        throw ParameterError(path + " has shape " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected " +
                             std::to_string(lay.rows()) + "x" + std::to_string(lay.cols()));
    const int klass = tight_class(lay, m);
    return BlockMatrix(lay, std::move(m), klass);
}

// Per-agent matrices stacked vertically into one (n * rows) x cols matrix.
void save_stacked(const std::string& path, const std::vector<Eigen::MatrixXd>& mats) {
    if (mats.empty()) throw ParameterError("nothing to write to " + path);
    const auto rows = mats.front().rows();
    Eigen::MatrixXd stacked(rows * static_cast<Eigen::Index>(mats.size()), mats.front().cols());
    for (std::size_t i = 0; i < mats.size(); ++i) stacked.middleRows(rows * i, rows) = mats[i];
    save_matrix(path, stacked);
}

std::vector<Eigen::MatrixXd> load_stacked(const std::string& path, int count, int rows, int cols) {
    Eigen::MatrixXd stacked = load_matrix(path);
    if (stacked.rows() != static_cast<Eigen::Index>(count) * rows || stacked.cols() != cols)
        throw ParameterError(path + " does not hold " + std::to_string(count) + " stacked " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " matrices");
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(count);
    for (int i = 0; i < count; ++i) mats.push_back(stacked.middleRows(i * rows, rows));
    return mats;
}

std::string trimmed(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// key=value lines; blank lines ignored.
std::vector<std::pair<std::string, std::string>> read_keyed_lines(const std::string& path) {
    auto is = open_in(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(is, line)) {
        line = trimmed(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParameterError(path + ": expected key=value, got '" + line + "'");
        out.emplace_back(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw ParameterError(what + ": trailing characters in '" + text + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParameterError(what + ": cannot parse '" + text + "' as a number");
    } catch (const std::out_of_range&) {
        throw ParameterError(what + ": value '" + text + "' out of range");
    }
}

int parse_int(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(text, &pos);
        if (pos != text.size()) throw ParameterError(what + ": trailing characters in '" + text + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParameterError(what + ": cannot parse '" + text + "' as an integer");
    } catch (const std::out_of_range&) {
        throw ParameterError(what + ": value '" + text + "' out of range");
    }
}

}  // namespace

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << fmt(m(i, j));
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
    long long rows = -1, cols = -1;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
        throw ParameterError("matrix text must start with nonnegative 'rows cols'");
    Eigen::MatrixXd m(rows, cols);
    for (long long i = 0; i < rows; ++i)
        for (long long j = 0; j < cols; ++j)
            if (!(is >> m(i, j)))
                throw ParameterError("matrix text ended before " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + " entries were read");
    return m;
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    auto os = open_out(path);
    write_matrix(os, m);
    if (!os) throw ParameterError("failed writing " + path);
}

Eigen::MatrixXd load_matrix(const std::string& path) {
    auto is = open_in(path);
    try {
        return read_matrix(is);
    } catch (const ParameterError& e) {
        throw ParameterError(path + ": " + e.what());
    }
}

void save_system(const std::string& dir, const NetworkedSystem& sys) {
    validate_system(sys);
    fs::create_directories(dir);
    const fs::path base(dir);

    save_edge_list((base / "edges.txt").string(), *sys.topology);

    {
        auto os = open_out((base / "layout.txt").string());
        os << "kind=" << to_string(sys.topology->kind) << '\n';
        os << "branching=" << sys.topology->branching << '\n';
        os << "side=" << sys.topology->side << '\n';
        os << "n=" << sys.n() << '\n';
        for (int i = 0; i < sys.n(); ++i)
            os << i << ' ' << sys.xx.row_dim(i) << ' ' << sys.ux.row_dim(i) << '\n';
    }

    save_matrix((base / "A.txt").string(), sys.A.data);
    save_matrix((base / "B.txt").string(), sys.B.data);
    save_matrix((base / "Q.txt").string(), sys.Q.data);
    save_matrix((base / "R.txt").string(), sys.R.data);
    save_matrix((base / "Phi.txt").string(), sys.Phi);
    save_stacked((base / "local_Q.txt").string(), sys.local_Q);
    save_stacked((base / "local_R.txt").string(), sys.local_R);

    {
        auto os = open_out((base / "scalars.txt").string());
        os << "sigma0=" << fmt(sys.sigma0) << '\n';
        const Eigen::MatrixXd scaled = sys.Phi(0, 0) * Eigen::MatrixXd::Identity(sys.d_x(), sys.d_x());
        if ((sys.Phi - scaled).norm() <= 1e-14 * std::max(1.0, sys.Phi.norm()))
            os << "psi_scale=" << fmt(sys.Phi(0, 0)) << '\n';
    }
}

NetworkedSystem load_system(const std::string& dir) {
    const fs::path base(dir);
    Topology topo = load_edge_list((base / "edges.txt").string());

    std::vector<int> dims_x, dims_u;
    {
        const std::string path = (base / "layout.txt").string();
        auto is = open_in(path);
        std::string line;
        int declared_n = -1;
        bool in_agents = false;
        while (std::getline(is, line)) {
            line = trimmed(line);
            if (line.empty()) continue;
            if (!in_agents) {
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ParameterError(path + ": expected key=value before agent rows");
                const std::string key = trimmed(line.substr(0, eq));
                const std::string value = trimmed(line.substr(eq + 1));
                if (key == "kind") topo.kind = graph_kind_from_string(value);
                else if (key == "branching") topo.branching = parse_int(value, path + " branching");
                else if (key == "side") topo.side = parse_int(value, path + " side");
                else if (key == "n") {
                    declared_n = parse_int(value, path + " n");
                    in_agents = true;
                } else throw ParameterError(path + ": unknown key '" + key + "'");
                continue;
            }
            std::istringstream row(line);
            int agent = -1, dx = 0, du = 0;
            if (!(row >> agent >> dx >> du))
                throw ParameterError(path + ": agent row must be 'i d_x_i d_u_i', got '" + line + "'");
            if (agent != static_cast<int>(dims_x.size()))
                throw ParameterError(path + ": agent rows must be in order 0..n-1");
            if (dx <= 0 || du <= 0) throw ParameterError(path + ": agent dims must be positive");
            dims_x.push_back(dx);
            dims_u.push_back(du);
        }
        if (declared_n < 0) throw ParameterError(path + ": missing n=");
        if (declared_n != topo.n)
            throw ParameterError(path + ": n=" + std::to_string(declared_n) +
                                 " disagrees with edges.txt n=" + std::to_string(topo.n));
        if (static_cast<int>(dims_x.size()) != topo.n)
            throw ParameterError(path + ": expected " + std::to_string(topo.n) + " agent rows");
    }

    NetworkedSystem sys;
    sys.topology = std::make_shared<Topology>(std::move(topo));
    sys.hood = std::make_shared<NeighborhoodIndex>(*sys.topology);
    sys.xx = BlockLayout(dims_x, dims_x, sys.hood);
    sys.ux = BlockLayout(dims_u, dims_x, sys.hood);
    sys.uu = BlockLayout(dims_u, dims_u, sys.hood);

    sys.A = load_block_matrix((base / "A.txt").string(), sys.xx);
    sys.B = load_block_matrix((base / "B.txt").string(), sys.ux.transposed());
    sys.Q = load_block_matrix((base / "Q.txt").string(), sys.xx);
    sys.R = load_block_matrix((base / "R.txt").string(), sys.uu);

    const int n = sys.n();
    if (fs::exists(base / "local_Q.txt")) {
        sys.local_Q = load_stacked((base / "local_Q.txt").string(), n, sys.d_x(), sys.d_x());
    } else {
        // Fallback for hand-written fixtures: with block-diagonal Q each agent
        // owns n times its own diagonal block.
        if (!sys.Q.is_in_class(0, 0.0))
            throw ParameterError(dir + ": Q has off-diagonal blocks, so local_Q.txt is required");
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd qi = Eigen::MatrixXd::Zero(sys.d_x(), sys.d_x());
            const int off = sys.xx.row_offset(i), d = sys.xx.row_dim(i);
            qi.block(off, off, d, d) = n * sys.Q.data.block(off, off, d, d);
            sys.local_Q.push_back(std::move(qi));
        }
    }
    if (fs::exists(base / "local_R.txt")) {
        sys.local_R = load_stacked((base / "local_R.txt").string(), n, sys.d_u(), sys.d_u());
    } else {
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd ri = Eigen::MatrixXd::Zero(sys.d_u(), sys.d_u());
            const int off = sys.uu.row_offset(i), d = sys.uu.row_dim(i);
            ri.block(off, off, d, d) = n * sys.R.data.block(off, off, d, d);
            sys.local_R.push_back(std::move(ri));
        }
    }

    double sigma0 = -1.0;
    std::optional<double> psi_scale;
    for (const auto& [key, value] : read_keyed_lines((base / "scalars.txt").string())) {
        if (key == "sigma0") sigma0 = parse_double(value, "sigma0");
        else if (key == "psi_scale") psi_scale = parse_double(value, "psi_scale");
        else throw ParameterError(dir + "/scalars.txt: unknown key '" + key + "'");
    }
    if (sigma0 < 0.0) throw ParameterError(dir + "/scalars.txt: missing sigma0");
    sys.sigma0 = sigma0;

    if (fs::exists(base / "Phi.txt")) {
        sys.Phi = load_matrix((base / "Phi.txt").string());
        if (sys.Phi.rows() != sys.d_x() || sys.Phi.cols() != sys.d_x())
            throw ParameterError(dir + "/Phi.txt has the wrong shape");
    } else if (psi_scale) {
        sys.Phi = *psi_scale * Eigen::MatrixXd::Identity(sys.d_x(), sys.d_x());
    } else {
        throw ParameterError(dir + ": need Phi.txt or psi_scale in scalars.txt");
    }

    validate_system(sys);
    return sys;
}

void save_controller(const std::string& path, const Controller& controller) {
    auto os = open_out(path);
    os << "r " << controller.r << '\n';
    write_matrix(os, controller.K.data);
    if (!os) throw ParameterError("failed writing " + path);
}

Controller load_controller(const std::string& path, const NetworkedSystem& sys) {
    auto is = open_in(path);
    std::string tag;
    int r = -1;
    if (!(is >> tag >> r) || tag != "r" || r < 0)
        throw ParameterError(path + ": controller file must start with 'r <range>'");
    Eigen::MatrixXd k;
    try {
        k = read_matrix(is);
    } catch (const ParameterError& e) {
        throw ParameterError(path + ": " + e.what());
    }
    if (k.rows() != sys.d_u() || k.cols() != sys.d_x())
        throw ParameterError(path + ": gain has the wrong shape");
    Controller c;
    const int klass = tight_class(sys.ux, k);
    c.K = BlockMatrix(sys.ux, std::move(k), klass);
    if (c.K.sparsity_class.value_or(0) > r)
        throw ParameterError(path + ": gain has support outside its declared r-hop range");
    c.r = r;
    return c;
}

}  // namespace netlqr
