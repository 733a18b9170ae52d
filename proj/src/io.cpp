#include "cloob/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace cloob::io {

namespace {

static_assert(sizeof(double) == 8);

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("unexpected end of file reading u32");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("unexpected end of file reading f64");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
    char got[4];
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw IoError("bad magic in " + path + " (expected " + magic + ")");
}

void write_mat_block(std::ostream& os, const Mat& m) {
    for (double v : m.raw()) put_f64(os, v);
}

Mat read_mat_block(std::istream& is, std::size_t rows, std::size_t cols) {
    Mat m(rows, cols, 0.0);
    for (double& v : m.raw()) v = get_f64(is);
    return m;
}

}  // namespace

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
}

void write_embeddings(const std::string& path, const Mat& rows) {
    auto os = open_out(path, true);
    os.write("EMB1", 4);
    put_u32(os, static_cast<std::uint32_t>(rows.rows()));
    put_u32(os, static_cast<std::uint32_t>(rows.cols()));
    write_mat_block(os, rows);
    if (!os) throw IoError("write failed: " + path);
}

Mat read_embeddings(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, "EMB1", path);
    std::uint32_t n = get_u32(is);
    std::uint32_t d = get_u32(is);
    if (n == 0 || d == 0) throw IoError("empty embeddings file: " + path);
    return read_mat_block(is, n, d);
}

void write_dataset_split(const std::string& path, const Mat& xs, const Mat& ys,
                         const std::vector<std::uint32_t>& labels,
                         std::uint32_t n_clusters) {
    if (xs.rows() != ys.rows() || labels.size() != xs.rows())
        throw std::invalid_argument("write_dataset_split: row count mismatch");
    auto os = open_out(path, true);
    os.write("PDS1", 4);
    put_u32(os, static_cast<std::uint32_t>(xs.rows()));
    put_u32(os, static_cast<std::uint32_t>(xs.cols()));
    put_u32(os, static_cast<std::uint32_t>(ys.cols()));
    put_u32(os, n_clusters);
    write_mat_block(os, xs);
    write_mat_block(os, ys);
    for (std::uint32_t l : labels) put_u32(os, l);
    if (!os) throw IoError("write failed: " + path);
}

DatasetSplit read_dataset_split(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, "PDS1", path);
    std::uint32_t n = get_u32(is);
    std::uint32_t d_x = get_u32(is);
    std::uint32_t d_y = get_u32(is);
    std::uint32_t n_clusters = get_u32(is);
    if (n == 0 || d_x == 0 || d_y == 0) throw IoError("empty dataset file: " + path);
    DatasetSplit out;
    out.n_clusters = n_clusters;
    out.xs = read_mat_block(is, n, d_x);
    out.ys = read_mat_block(is, n, d_y);
    out.labels.resize(n);
    for (std::uint32_t& l : out.labels) l = get_u32(is);
    return out;
}

void write_metrics_csv(const std::string& path, const train::RunMetrics& metrics) {
    auto os = open_out(path, false);
    os << "epoch,lr,train_loss,r1_i2t,r5_i2t,r1_t2i,r5_t2i,effeig_x,effeig_y,ajne_x,"
          "ajne_y\n";
    for (const auto& e : metrics.epochs) {
        os << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.train_loss)
           << ',' << format_double(e.r1_i2t) << ',' << format_double(e.r5_i2t) << ','
           << format_double(e.r1_t2i) << ',' << format_double(e.r5_t2i) << ',' << e.effeig_x
           << ',' << e.effeig_y << ',' << format_double(e.ajne_x) << ','
           << format_double(e.ajne_y) << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<PlotSeries>& series) {
    const double w = 640.0, h = 400.0, ml = 60.0, mr = 20.0, mt = 40.0, mb = 40.0;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.xs.size() != s.ys.size())
            throw std::invalid_argument("write_line_plot_svg: series size mismatch");
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (first) {
                xmin = xmax = s.xs[i];
                ymin = ymax = s.ys[i];
                first = false;
            }
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#8c564b", "#e377c2"};
    auto os = open_out(path, false);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"" << h - mb + 16 << "\" font-size=\"11\">"
       << format_double(xmin) << "</text>\n";
    os << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 16
       << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(xmax) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << h - mb
       << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(ymin) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(ymax) << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = colors[si % 6];
        os << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            os << (i == 0 ? 'M' : 'L') << px(s.xs[i]) << ' ' << py(s.ys[i]) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << w - mr - 4 << "\" y=\"" << mt + 14.0 * (si + 1)
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.name
           << "</text>\n";
    }
    os << "</svg>\n";
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace cloob::io
