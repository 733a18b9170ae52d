#pragma once

#include "cloob/mat.hpp"
#include "cloob/trainer.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cloob::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Embeddings file: magic "EMB1", u32 n, u32 d, n*d float64 row-major.
/// All integers and doubles little-endian.
void write_embeddings(const std::string& path, const Mat& rows);
Mat read_embeddings(const std::string& path);

/// Dataset file: magic "PDS1", u32 n, u32 d_x, u32 d_y, u32 n_clusters,
/// X block, Y block (float64 row-major), n u32 labels. One file per split.
void write_dataset_split(const std::string& path, const Mat& xs, const Mat& ys,
                         const std::vector<std::uint32_t>& labels,
                         std::uint32_t n_clusters);
struct DatasetSplit {
    Mat xs;
    Mat ys;
    std::vector<std::uint32_t> labels;
    std::uint32_t n_clusters = 0;
};
DatasetSplit read_dataset_split(const std::string& path);

/// Metrics CSV with the fixed schema
/// epoch,lr,train_loss,r1_i2t,r5_i2t,r1_t2i,r5_t2i,effeig_x,effeig_y,ajne_x,ajne_y.
/// Floats are written with max_digits10 shortest round-trip formatting.
void write_metrics_csv(const std::string& path, const train::RunMetrics& metrics);

/// Hand-written SVG line plot of one or more named series over a shared x
/// axis (no plotting dependency).
struct PlotSeries {
    std::string name;
    Vec xs;
    Vec ys;
};
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<PlotSeries>& series);

std::string format_double(double v);

}  // namespace cloob::io
