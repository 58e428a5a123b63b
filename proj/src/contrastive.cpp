#include "mopatch/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace mopatch {

float cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) fail("cosine_similarity: dimension mismatch");
    if (a.empty()) fail("cosine_similarity: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * double(b[i]);
        na += double(a[i]) * double(a[i]);
        nb += double(b[i]) * double(b[i]);
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) fail("cosine_similarity: zero-norm vector");
    return float(std::clamp(dot / (na * nb), -1.0, 1.0));
}

SimilarityMatrix similarity_matrix(const std::vector<std::vector<float>>& motion_embs,
                                   const std::vector<std::vector<float>>& text_embs,
                                   float temperature) {
    if (motion_embs.size() != text_embs.size()) fail("similarity_matrix: batch sizes differ");
    if (motion_embs.empty()) fail("similarity_matrix: empty batch");
    if (temperature <= 0.0f) fail("similarity_matrix: temperature must be positive");
    const int b = int(motion_embs.size());
    SimilarityMatrix sim;
    sim.batch = b;
    sim.temperature = temperature;
    sim.values.resize(size_t(b) * size_t(b));
    for (int i = 0; i < b; ++i) {
        double norm = 0.0;
        for (float v : motion_embs[size_t(i)]) norm += double(v) * double(v);
        if (std::sqrt(norm) < 1e-12) fail("similarity_matrix: zero-norm motion row " + std::to_string(i));
        norm = 0.0;
        for (float v : text_embs[size_t(i)]) norm += double(v) * double(v);
        if (std::sqrt(norm) < 1e-12) fail("similarity_matrix: zero-norm text row " + std::to_string(i));
    }
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j)
            sim.values[size_t(i) * size_t(b) + size_t(j)] = cosine_similarity(motion_embs[size_t(i)], text_embs[size_t(j)]);
    return sim;
}

namespace {

// -1/B * sum_i log softmax(row_i)[i], with max subtraction
double cross_entropy_diag(const SimilarityMatrix& sim, bool rows) {
    const int b = sim.batch;
    const double inv_tau = 1.0 / double(sim.temperature);
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        double mx = -1e300;
        for (int j = 0; j < b; ++j) {
            double v = double(rows ? sim.at(i, j) : sim.at(j, i)) * inv_tau;
            mx = std::max(mx, v);
        }
        double lse = 0.0;
        for (int j = 0; j < b; ++j) {
            double v = double(rows ? sim.at(i, j) : sim.at(j, i)) * inv_tau;
            lse += std::exp(v - mx);
        }
        double diag = double(sim.at(i, i)) * inv_tau;
        total += (diag - mx) - std::log(lse);
    }
    return -total / double(b);
}

}  // namespace

float symmetric_infonce(const SimilarityMatrix& sim) {
    if (sim.batch < 1) fail("symmetric_infonce: empty batch");
    return float(cross_entropy_diag(sim, true) + cross_entropy_diag(sim, false));
}

Graph::NodeId infonce_loss_node(Graph& g, const std::vector<Graph::NodeId>& motion_rows,
                                const std::vector<Graph::NodeId>& text_rows, float temperature) {
    if (motion_rows.size() != text_rows.size() || motion_rows.empty())
        fail("infonce_loss_node: batch mismatch");
    if (temperature <= 0.0f) fail("infonce_loss_node: temperature must be positive");
    const int b = int(motion_rows.size());

    auto stack_normalized = [&](const std::vector<Graph::NodeId>& rows) {
        Graph::NodeId m = g.l2_normalize(rows[0]);
        for (int i = 1; i < b; ++i) m = g.concat(m, g.l2_normalize(rows[size_t(i)]), 0);
        return m;
    };
    Graph::NodeId motions = stack_normalized(motion_rows);  // [B, D]
    Graph::NodeId texts = stack_normalized(text_rows);      // [B, D]

    Graph::NodeId logits = g.scale(g.matmul(motions, g.transpose(texts)), 1.0f / temperature);

    Tensor eye({b, b});
    for (int i = 0; i < b; ++i) eye.data[size_t(i) * size_t(b) + size_t(i)] = 1.0f;
    Graph::NodeId diag_mask = g.input(std::move(eye), "infonce.diag");

    // mean of (log_softmax .* I) is sum(diag)/B^2; scaling by -B gives the
    // per-direction cross entropy -1/B sum_i log p_ii
    Graph::NodeId m2t = g.scale(g.mean(g.mul(g.log_softmax(logits), diag_mask)), -float(b));
    Graph::NodeId t2m = g.scale(g.mean(g.mul(g.log_softmax(g.transpose(logits)), diag_mask)), -float(b));
    return g.add(m2t, t2m);
}

}  // namespace mopatch
