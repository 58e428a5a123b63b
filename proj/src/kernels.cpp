#include "mopatch/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace mopatch::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// work-size threshold below which spawning a team is not worth it
constexpr int64_t kParallelCutoff = 1 << 14;

// ---- shared inner loops -------------------------------------------------
// Both the serial references and the OpenMP variants run these, one output
// row at a time, so the per-element accumulation order never changes.

inline void matmul_nn_row(float* c, const float* a, const float* b, int i, int k, int n) {
    float* ci = c + int64_t(i) * n;
    const float* ai = a + int64_t(i) * k;
    std::fill(ci, ci + n, 0.0f);
    for (int kk = 0; kk < k; ++kk) {
        const float av = ai[kk];
        const float* bk = b + int64_t(kk) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
}

inline void matmul_nt_row(float* c, const float* a, const float* b, int i, int k, int n) {
    float* ci = c + int64_t(i) * n;
    const float* ai = a + int64_t(i) * k;
    for (int j = 0; j < n; ++j) {
        const float* bj = b + int64_t(j) * k;
        float acc = 0.0f;
        for (int kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
        ci[j] = acc;
    }
}

inline void matmul_tn_row(float* c, const float* a, const float* b, int i, int m, int k, int n) {
    // c[i][j] = sum_kk a[kk][i] * b[kk][j], k ascending per element
    float* ci = c + int64_t(i) * n;
    std::fill(ci, ci + n, 0.0f);
    for (int kk = 0; kk < k; ++kk) {
        const float av = a[int64_t(kk) * m + i];
        const float* bk = b + int64_t(kk) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
}

inline void softmax_row(float* y, const float* x, int cols) {
    float mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < cols; ++j) y[j] *= inv;
}

inline void log_softmax_row(float* y, const float* x, int cols) {
    float mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) sum += std::exp(x[j] - mx);
    const float lse = std::log(sum);
    for (int j = 0; j < cols; ++j) y[j] = x[j] - mx - lse;
}

inline void layer_norm_row(float* y, float* row_mean, float* row_inv_std,
                           const float* x, const float* gamma, const float* beta,
                           int cols, float eps) {
    float mean = 0.0f;
    for (int j = 0; j < cols; ++j) mean += x[j];
    mean /= float(cols);
    float var = 0.0f;
    for (int j = 0; j < cols; ++j) {
        float d = x[j] - mean;
        var += d * d;
    }
    var /= float(cols);
    const float inv_std = 1.0f / std::sqrt(var + eps);
    *row_mean = mean;
    *row_inv_std = inv_std;
    for (int j = 0; j < cols; ++j) y[j] = (x[j] - mean) * inv_std * gamma[j] + beta[j];
}

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluA = 0.044715f;

inline float gelu_one(float x) {
    float u = kGeluC * (x + kGeluA * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_grad_one(float x) {
    float u = kGeluC * (x + kGeluA * x * x * x);
    float t = std::tanh(u);
    float sech2 = 1.0f - t * t;
    float du = kGeluC * (1.0f + 3.0f * kGeluA * x * x);
    return 0.5f * (1.0f + t) + 0.5f * x * sech2 * du;
}

inline void l2_normalize_row(float* y, float* row_norm, const float* x, int cols, float eps) {
    float ss = 0.0f;
    for (int j = 0; j < cols; ++j) ss += x[j] * x[j];
    float norm = std::sqrt(ss);
    float denom = std::max(norm, eps);
    *row_norm = denom;
    const float inv = 1.0f / denom;
    for (int j = 0; j < cols; ++j) y[j] = x[j] * inv;
}

}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

// ---- OpenMP variants ----------------------------------------------------

void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n) {
    const bool par = parallel_enabled() && int64_t(m) * k * n >= kParallelCutoff && m > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) matmul_nn_row(c, a, b, i, k, n);
}

void matmul_nt(float* c, const float* a, const float* b, int m, int k, int n) {
    const bool par = parallel_enabled() && int64_t(m) * k * n >= kParallelCutoff && m > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) matmul_nt_row(c, a, b, i, k, n);
}

void matmul_tn(float* c, const float* a, const float* b, int m, int k, int n) {
    const bool par = parallel_enabled() && int64_t(m) * k * n >= kParallelCutoff && m > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) matmul_tn_row(c, a, b, i, m, k, n);
}

void softmax_rows(float* y, const float* x, int64_t rows, int cols) {
    const bool par = parallel_enabled() && rows * cols >= kParallelCutoff && rows > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t r = 0; r < rows; ++r) softmax_row(y + r * cols, x + r * cols, cols);
}

void log_softmax_rows(float* y, const float* x, int64_t rows, int cols) {
    const bool par = parallel_enabled() && rows * cols >= kParallelCutoff && rows > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t r = 0; r < rows; ++r) log_softmax_row(y + r * cols, x + r * cols, cols);
}

void layer_norm_rows(float* y, float* row_mean, float* row_inv_std,
                     const float* x, const float* gamma, const float* beta,
                     int64_t rows, int cols, float eps) {
    const bool par = parallel_enabled() && rows * cols >= kParallelCutoff && rows > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t r = 0; r < rows; ++r)
        layer_norm_row(y + r * cols, row_mean + r, row_inv_std + r, x + r * cols, gamma, beta, cols, eps);
}

void gelu(float* y, const float* x, int64_t n) {
    const bool par = parallel_enabled() && n >= kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_grad(float* dx, const float* x, const float* dy, int64_t n) {
    const bool par = parallel_enabled() && n >= kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_one(x[i]);
}

void l2_normalize_rows(float* y, float* row_norm, const float* x, int64_t rows, int cols, float eps) {
    const bool par = parallel_enabled() && rows * cols >= kParallelCutoff && rows > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t r = 0; r < rows; ++r) l2_normalize_row(y + r * cols, row_norm + r, x + r * cols, cols, eps);
}

// ---- serial references --------------------------------------------------

namespace serial {

void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_nn_row(c, a, b, i, k, n);
}

void matmul_nt(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_nt_row(c, a, b, i, k, n);
}

void matmul_tn(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_tn_row(c, a, b, i, m, k, n);
}

void softmax_rows(float* y, const float* x, int64_t rows, int cols) {
    for (int64_t r = 0; r < rows; ++r) softmax_row(y + r * cols, x + r * cols, cols);
}

void log_softmax_rows(float* y, const float* x, int64_t rows, int cols) {
    for (int64_t r = 0; r < rows; ++r) log_softmax_row(y + r * cols, x + r * cols, cols);
}

void layer_norm_rows(float* y, float* row_mean, float* row_inv_std,
                     const float* x, const float* gamma, const float* beta,
                     int64_t rows, int cols, float eps) {
    for (int64_t r = 0; r < rows; ++r)
        layer_norm_row(y + r * cols, row_mean + r, row_inv_std + r, x + r * cols, gamma, beta, cols, eps);
}

void gelu(float* y, const float* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_grad(float* dx, const float* x, const float* dy, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_one(x[i]);
}

void l2_normalize_rows(float* y, float* row_norm, const float* x, int64_t rows, int cols, float eps) {
    for (int64_t r = 0; r < rows; ++r) l2_normalize_row(y + r * cols, row_norm + r, x + r * cols, cols, eps);
}

}  // namespace serial

}  // namespace mopatch::kernels
