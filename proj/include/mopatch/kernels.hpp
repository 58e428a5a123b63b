#pragma once

#include <cstdint>

namespace mopatch::kernels {

// Dense kernels behind the graph ops. Every kernel computes each output
// element with a fixed accumulation order, so the OpenMP variants are
// bitwise identical to the serial references (they parallelize across
// independent output elements only). The serial reference lives in
// kernels::serial and is compared against in tests and the benchmark.

void set_parallel(bool enabled);
bool parallel_enabled();

// c[m,n] = a[m,k] * b[k,n]
void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n);
// c[m,n] = a[m,k] * b[n,k]^T
void matmul_nt(float* c, const float* a, const float* b, int m, int k, int n);
// c[m,n] = a[k,m]^T * b[k,n]
void matmul_tn(float* c, const float* a, const float* b, int m, int k, int n);

void softmax_rows(float* y, const float* x, int64_t rows, int cols);
void log_softmax_rows(float* y, const float* x, int64_t rows, int cols);
// also writes per-row mean and inverse stddev for the backward pass
void layer_norm_rows(float* y, float* row_mean, float* row_inv_std,
                     const float* x, const float* gamma, const float* beta,
                     int64_t rows, int cols, float eps);
void gelu(float* y, const float* x, int64_t n);
void gelu_grad(float* dx, const float* x, const float* dy, int64_t n);
void l2_normalize_rows(float* y, float* row_norm, const float* x, int64_t rows, int cols, float eps);

namespace serial {
void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n);
void matmul_nt(float* c, const float* a, const float* b, int m, int k, int n);
void matmul_tn(float* c, const float* a, const float* b, int m, int k, int n);
void softmax_rows(float* y, const float* x, int64_t rows, int cols);
void log_softmax_rows(float* y, const float* x, int64_t rows, int cols);
void layer_norm_rows(float* y, float* row_mean, float* row_inv_std,
                     const float* x, const float* gamma, const float* beta,
                     int64_t rows, int cols, float eps);
void gelu(float* y, const float* x, int64_t n);
void gelu_grad(float* dx, const float* x, const float* dy, int64_t n);
void l2_normalize_rows(float* y, float* row_norm, const float* x, int64_t rows, int cols, float eps);
}  // namespace serial

}  // namespace mopatch::kernels
