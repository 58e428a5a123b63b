#pragma once

#include <vector>

#include "mopatch/graph.hpp"

namespace mopatch {

inline constexpr float kDefaultTemperature = 0.07f;

// B x B cosine similarities between matched motion/text batches. The
// temperature is carried along but not yet applied to the values.
struct SimilarityMatrix {
    int batch = 0;
    float temperature = kDefaultTemperature;
    std::vector<float> values;  // row = motion, col = text

    float at(int i, int j) const { return values[size_t(i) * size_t(batch) + size_t(j)]; }
};

float cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

SimilarityMatrix similarity_matrix(const std::vector<std::vector<float>>& motion_embs,
                                   const std::vector<std::vector<float>>& text_embs,
                                   float temperature);

// Symmetric cross-entropy over S/tau with the diagonal as positives,
// log-sum-exp stabilized. The motion-to-text term runs over rows, the
// text-to-motion term over columns.
float symmetric_infonce(const SimilarityMatrix& sim);

// Same loss built on the tape for training. `motion_rows` and `text_rows`
// are B nodes of shape [1, D]; embeddings are L2-normalized here, so inputs
// are the raw projection-head outputs.
Graph::NodeId infonce_loss_node(Graph& g, const std::vector<Graph::NodeId>& motion_rows,
                                const std::vector<Graph::NodeId>& text_rows, float temperature);

}  // namespace mopatch
