#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drpets/ensemble.hpp"
#include "drpets/errors.hpp"
#include "drpets/textio.hpp"

namespace drpets {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& token) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size() || errno == ERANGE)
        throw InvalidInput("not a number: '" + token + "'");
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << contents;
    if (!out) throw IoError("write failed for " + path);
}

namespace {

constexpr const char* kMagic = "drpets-ensemble";
constexpr int kVersion = 1;

template <class Row>
void write_row(std::ostringstream& os, const char* tag, const Row& row) {
    os << tag;
    for (Eigen::Index i = 0; i < row.size(); ++i) os << ' ' << format_double(row[i]);
    os << '\n';
}

class Reader {
public:
    explicit Reader(const std::string& text) : in_(text) {}

    std::istringstream next_line(const std::string& expected_tag) {
        std::string line;
        if (!std::getline(in_, line)) throw InvalidInput("checkpoint truncated before " + expected_tag);
        ++line_no_;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != expected_tag)
            throw InvalidInput("checkpoint line " + std::to_string(line_no_) + ": expected '" +
                               expected_tag + "', found '" + tag + "'");
        return ls;
    }

    Eigen::RowVectorXd row(const std::string& tag, Eigen::Index n) {
        auto ls = next_line(tag);
        Eigen::RowVectorXd v(n);
        std::string tok;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(ls >> tok)) throw InvalidInput("checkpoint row '" + tag + "' too short");
            v[i] = parse_double(tok);
        }
        if (ls >> tok) throw InvalidInput("checkpoint row '" + tag + "' too long");
        return v;
    }

private:
    std::istringstream in_;
    std::size_t line_no_ = 0;
};

}  // namespace

std::string serialize(const EnsembleModel& model) {
    model.validate();
    std::ostringstream os;
    const auto& a = model.arch;
    os << kMagic << ' ' << kVersion << '\n';
    os << "architecture " << a.obs_dim << ' ' << a.action_dim << ' ' << a.activation << ' '
       << a.hidden.size();
    for (auto w : a.hidden) os << ' ' << w;
    os << '\n';
    os << "members " << model.size() << '\n';
    write_row(os, "input_mean", model.norm.input_mean);
    write_row(os, "input_std", model.norm.input_std);
    write_row(os, "target_mean", model.norm.target_mean);
    write_row(os, "target_std", model.norm.target_std);
    for (std::size_t b = 0; b < model.size(); ++b) {
        os << "member " << b << '\n';
        const auto& layers = model.members[b].layers;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& w = layers[l].weight;
            os << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
            for (Eigen::Index r = 0; r < w.rows(); ++r) write_row(os, "w", w.row(r));
            write_row(os, "b", layers[l].bias);
        }
    }
    os << "end\n";
    return os.str();
}

EnsembleModel deserialize(const std::string& text) {
    Reader rd(text);
    {
        auto ls = rd.next_line(kMagic);
        int version = 0;
        if (!(ls >> version) || version != kVersion)
            throw InvalidInput("unsupported checkpoint version");
    }
    EnsembleModel m;
    {
        auto ls = rd.next_line("architecture");
        std::size_t n_hidden = 0;
        if (!(ls >> m.arch.obs_dim >> m.arch.action_dim >> m.arch.activation >> n_hidden))
            throw InvalidInput("malformed architecture line");
        m.arch.hidden.assign(n_hidden, 0);
        for (auto& w : m.arch.hidden)
            if (!(ls >> w)) throw InvalidInput("malformed architecture line");
    }
    std::size_t count = 0;
    if (!(rd.next_line("members") >> count) || count == 0)
        throw InvalidInput("malformed member count");
    const auto in = static_cast<Eigen::Index>(m.arch.input_dim());
    const auto d = static_cast<Eigen::Index>(m.arch.obs_dim);
    m.norm.input_mean = rd.row("input_mean", in);
    m.norm.input_std = rd.row("input_std", in);
    m.norm.target_mean = rd.row("target_mean", d);
    m.norm.target_std = rd.row("target_std", d);
    for (std::size_t b = 0; b < count; ++b) {
        rd.next_line("member");
        MLPParams net = MLPParams::zeros(m.arch);
        for (auto& layer : net.layers) {
            auto ls = rd.next_line("layer");
            std::size_t idx = 0;
            Eigen::Index rows = 0, cols = 0;
            ls >> idx >> rows >> cols;
            if (rows != layer.weight.rows() || cols != layer.weight.cols())
                throw InvalidInput("layer shape does not match the architecture");
            for (Eigen::Index r = 0; r < rows; ++r) layer.weight.row(r) = rd.row("w", cols);
            layer.bias = rd.row("b", cols);
        }
        m.members.push_back(std::move(net));
    }
    rd.next_line("end");
    m.validate();
    return m;
}

void save_checkpoint(const EnsembleModel& model, const std::string& path) {
    write_file(path, serialize(model));
}

EnsembleModel load_checkpoint(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace drpets
