// Writes seeded synthetic datasets in LIBSVM text format, for demos and
// smoke runs when no benchmark data is on disk.
//
//   blobs   - k Gaussian clusters, labels +-1 by cluster parity
//   drift   - clusters activate one after another over the stream
//   rbf     - regression targets from a fixed random bump mixture

#include "nolana/baselines.hpp"
#include "nolana/stream.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace {

using nolana::Index;
using nolana::Matrix;
using nolana::Sample;
using nolana::Vector;

Matrix cluster_centers(Index k, Index dim, double spread, nolana::detail::Rng& rng) {
    Matrix centers(k, dim);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < dim; ++j)
            centers(i, j) = spread * (2.0 * rng.uniform01() - 1.0);
    return centers;
}

Vector noisy_point(const Matrix& centers, Index cluster, double noise,
                   nolana::detail::Rng& rng) {
    Vector x = centers.row(cluster).transpose();
    for (Index j = 0; j < x.size(); ++j) x[j] += rng.normal(noise);
    return x;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic LIBSVM-format dataset generator"};

    std::string kind = "blobs";
    std::string out_path;
    long count = 5000;
    Index dim = 4;
    Index clusters = 6;
    double noise = 0.25;
    double spread = 3.0;
    std::uint64_t seed = 1;

    app.add_option("kind", kind, "blobs | drift | rbf")
        ->check(CLI::IsMember({"blobs", "drift", "rbf"}));
    app.add_option("-o,--out", out_path, "output file")->required();
    app.add_option("-n,--count", count, "number of samples");
    app.add_option("-d,--dim", dim, "feature dimension");
    app.add_option("-k,--clusters", clusters, "number of clusters / bumps");
    app.add_option("--noise", noise, "within-cluster standard deviation");
    app.add_option("--spread", spread, "center coordinate range");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    nolana::detail::Rng rng(seed);
    const Matrix centers = cluster_centers(clusters, dim, spread, rng);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::fprintf(stderr, "cannot write '%s'\n", out_path.c_str());
        return 1;
    }

    for (long t = 0; t < count; ++t) {
        Index cluster;
        if (kind == "drift") {
            // Later stream segments draw from later clusters.
            const auto segment = static_cast<Index>(
                static_cast<double>(t) / static_cast<double>(count) *
                static_cast<double>(clusters));
            cluster = std::min(segment, clusters - 1);
        } else {
            cluster = static_cast<Index>(rng.uniform01() * static_cast<double>(clusters));
            cluster = std::min(cluster, clusters - 1);
        }

        Sample sample;
        sample.features = noisy_point(centers, cluster, noise, rng);
        if (kind == "rbf") {
            double y = 0.0;
            for (Index c = 0; c < clusters; ++c) {
                const double sign = (c % 2 == 0) ? 1.0 : -1.0;
                y += sign * std::exp(-(sample.features - centers.row(c).transpose())
                                          .squaredNorm() /
                                     (2.0 * spread));
            }
            sample.label = y + rng.normal(0.01);
        } else {
            sample.label = (cluster % 2 == 0) ? 1.0 : -1.0;
        }
        out << nolana::serialize_libsvm_line(sample) << '\n';
    }
    return 0;
}
