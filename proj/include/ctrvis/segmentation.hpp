#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ctrvis/image.hpp"

namespace ctrvis {

struct NcutOptions {
    int max_segments = 5;
    int max_side = 64;            // working resolution after block averaging
    int radius = 5;               // neighbors with 0 < dx^2 + dy^2 <= radius^2
    double sigma_color = 0.1;     // colors scaled to [0, 1]
    double sigma_space = 4.0;     // in working-resolution pixels
    double prune_below = 1e-10;   // edges lighter than this are dropped
    double max_ncut = 0.25;
    double stability_ratio = 0.06;  // min/max of the 20-bin eigenvector histogram
    double min_segment_fraction = 0.05;
    int dense_limit = 200;        // dense eigensolver up to this many nodes
    int block_size = 4;
    int max_iterations = 500;
    double tolerance = 1e-8;
};

/// Block-averaged copy of an image used as the segmentation graph.
struct WorkingImage {
    int width = 0;
    int height = 0;
    int scale = 1;  // each node covers a scale x scale block (clipped at edges)
    std::vector<Eigen::Vector3d> colors;  // row-major, channels in [0, 1]
};

WorkingImage downsample_for_segmentation(const ImageBuffer& img, int max_side);

/// Symmetric affinity matrix over the working image's nodes.
Eigen::SparseMatrix<double> affinity_matrix(const WorkingImage& wi, const NcutOptions& opts);

struct SegmentInfo {
    int id = 0;
    std::size_t size = 0;  // full-resolution pixel count
};

struct Segmentation {
    int width = 0;
    int height = 0;
    std::vector<int> labels;  // per pixel; kDropped for pixels of dropped segments
    std::vector<SegmentInfo> segments;  // retained, ascending id
    std::vector<int> dropped;           // ids of segments under the size floor

    static constexpr int kDropped = -1;

    /// Index into `segments` of the largest one; ties go to the lower id.
    std::size_t largest() const;
};

struct Bipartition {
    bool accepted = false;
    std::vector<int> side;  // 0 or 1 per node of the subgraph; 0 holds node 0
    double ncut = 0.0;
};

/// One two-way cut of the subgraph `w` (local node numbering) with node
/// colors `colors`. Uniform-color subgraphs are never split; disconnected
/// ones split off their largest connected component.
Bipartition normalized_bipartition(const Eigen::SparseMatrix<double>& w,
                                   const std::vector<Eigen::Vector3d>& colors, const NcutOptions& opts);

/// Fiedler vector of the normalized Laplacian of a connected graph, mapped
/// back through D^{-1/2}, signed so its largest-magnitude entry is positive.
Eigen::VectorXd ncut_indicator(const Eigen::SparseMatrix<double>& w, const NcutOptions& opts);

/// Labels on the working grid after recursive splitting; ids in creation order.
std::vector<int> segment_working_image(const WorkingImage& wi, const NcutOptions& opts);

/// Throws DegenerateImage when min(width, height) < 8.
Segmentation segment(const ImageBuffer& img, const NcutOptions& opts = {});

/// Upsamples working-grid labels and drops small segments.
Segmentation finalize_segmentation(const ImageBuffer& img, const WorkingImage& wi,
                                   const std::vector<int>& working_labels, double min_fraction);

}  // namespace ctrvis
