/* Exact nearest-centroid kernels.
 *
 * Reference semantics (shared with the NumPy backend, bit for bit):
 *   sqdist(x, c) = sum over j ascending of (f64(x[j]) - f64(c[j]))^2,
 *   one multiply and one add per term, no fused multiply-add;
 *   argmin scans centroids in ascending index with strict '<'.
 *
 * The compiled path screens candidates in float32 first and re-evaluates
 * only near-minimal ones in float64. The screen is an estimate with bounded
 * relative error, so widening the cutoff by SCREEN_MARGIN guarantees the
 * exact argmin (and every exact tie) survives screening; results are
 * therefore identical to the plain float64 scan on any hardware, fused
 * multiply-adds in the screen included. Compile this file with
 * -ffp-contract=off so the float64 re-evaluation never contracts.
 */

#include <math.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef float   vf16 __attribute__((vector_size(64)));
typedef int32_t vi16 __attribute__((vector_size(64)));
typedef float   vf8  __attribute__((vector_size(32)));
typedef double  vd8  __attribute__((vector_size(64)));

#if defined(__AVX512F__)
#include <immintrin.h>
static inline vf16 fma16(vf16 a, vf16 b, vf16 c) {
    return (vf16)_mm512_fmadd_ps((__m512)a, (__m512)b, (__m512)c);
}
#else
/* Two roundings instead of one; SCREEN_MARGIN covers both variants. */
static inline vf16 fma16(vf16 a, vf16 b, vf16 c) { return a * b + c; }
#endif

/* Relative slack: generous bound on the screen's float32 rounding error. */
#define SCREEN_MARGIN(d) (8.0 * ((double)(d) + 2.0) * 5.9604644775390625e-08)
/* Below this the screen may be dominated by subnormal rounding; scan all. */
#define SCREEN_TINY 1e-20f

static inline vf16 loadu16(const float *p) {
    vf16 v;
    __builtin_memcpy(&v, p, 64);
    return v;
}

static inline vf16 vminsel(vf16 a, vf16 b) {
    vi16 lt = a < b;
    return (vf16)(((vi16)a & lt) | ((vi16)b & ~lt));
}

static inline float hmin16(vf16 v) {
    float m = v[0];
    for (int l = 1; l < 16; l++) m = v[l] < m ? v[l] : m;
    return m;
}

static inline double sqdist64(const float *x, const double *c, ptrdiff_t d) {
    double acc = 0.0;
    for (ptrdiff_t j = 0; j < d; j++) {
        double t = (double)x[j] - c[j];
        acc = acc + t * t;
    }
    return acc;
}

/* Exact winner for one point given its screening row scr and screen min m. */
static void select_exact(const float *x, ptrdiff_t d,
                         const double *cent64, ptrdiff_t k,
                         const float *scr, float m,
                         int64_t *oi, double *os) {
    double best = INFINITY;
    int64_t bi = 0;
    if (!(m > SCREEN_TINY)) {
        for (ptrdiff_t kk = 0; kk < k; kk++) {
            double a = sqdist64(x, cent64 + kk * d, d);
            if (a < best) { best = a; bi = kk; }
        }
        *oi = bi;
        *os = best;
        return;
    }
    double thr = (double)m * (1.0 + SCREEN_MARGIN(d));
    ptrdiff_t kb = 0;
#if defined(__AVX512F__)
    /* Round the float64 cutoff up so the vector prefilter over-admits. */
    float thr_up = nextafterf((float)thr, INFINITY);
    __m512 vthr = _mm512_set1_ps(thr_up);
    for (; kb + 16 <= k; kb += 16) {
        __mmask16 msk =
            _mm512_cmp_ps_mask(_mm512_loadu_ps(scr + kb), vthr, _CMP_LE_OQ);
        while (msk) {
            int l = __builtin_ctz(msk);
            msk &= msk - 1;
            ptrdiff_t kk = kb + l;
            if ((double)scr[kk] <= thr) {
                double a = sqdist64(x, cent64 + kk * d, d);
                if (a < best) { best = a; bi = kk; }
            }
        }
    }
#endif
    for (; kb < k; kb++) {
        if ((double)scr[kb] <= thr) {
            double a = sqdist64(x, cent64 + kb * d, d);
            if (a < best) { best = a; bi = kb; }
        }
    }
    *oi = bi;
    *os = best;
}

/* Screening row for a single point; returns the row minimum via *mout. */
static void screen_one(const float *x, ptrdiff_t d,
                       const float *cent_t, ptrdiff_t k,
                       float *scr, float *mout) {
    vf16 vm;
    for (int l = 0; l < 16; l++) vm[l] = INFINITY;
    ptrdiff_t kb = 0;
    for (; kb + 16 <= k; kb += 16) {
        vf16 acc = {0.0f};
        for (ptrdiff_t j = 0; j < d; j++) {
            vf16 t = x[j] - loadu16(cent_t + j * k + kb);
            acc = fma16(t, t, acc);
        }
        __builtin_memcpy(scr + kb, &acc, 64);
        vm = vminsel(acc, vm);
    }
    float m = hmin16(vm);
    for (; kb < k; kb++) {
        float a = 0.0f;
        for (ptrdiff_t j = 0; j < d; j++) {
            float t = x[j] - cent_t[j * k + kb];
            a = a + t * t;
        }
        scr[kb] = a;
        m = a < m ? a : m;
    }
    *mout = m;
}

/* pts: (n, d) row-major float32. cent_t: (d, k) transposed float32 copy of
 * the centroids. cent64: (k, d) float64 copy. out_idx/out_sqd: length n.
 * Returns 0, or -1 if the screening workspace cannot be allocated. */
int vq_assign_block(const float *pts, ptrdiff_t n, ptrdiff_t d,
                    const float *cent_t, const double *cent64, ptrdiff_t k,
                    int64_t *out_idx, double *out_sqd) {
    enum { PT = 8 };
    float *scr = malloc((size_t)PT * (size_t)k * sizeof(float));
    if (scr == NULL) return -1;
    ptrdiff_t p0 = 0;
    for (; p0 + PT <= n; p0 += PT) {
        const float *x0 = pts + (p0 + 0) * d;
        const float *x1 = pts + (p0 + 1) * d;
        const float *x2 = pts + (p0 + 2) * d;
        const float *x3 = pts + (p0 + 3) * d;
        const float *x4 = pts + (p0 + 4) * d;
        const float *x5 = pts + (p0 + 5) * d;
        const float *x6 = pts + (p0 + 6) * d;
        const float *x7 = pts + (p0 + 7) * d;
        vf16 vm0, vm1, vm2, vm3, vm4, vm5, vm6, vm7;
        for (int l = 0; l < 16; l++) {
            vm0[l] = INFINITY; vm1[l] = INFINITY;
            vm2[l] = INFINITY; vm3[l] = INFINITY;
            vm4[l] = INFINITY; vm5[l] = INFINITY;
            vm6[l] = INFINITY; vm7[l] = INFINITY;
        }
        ptrdiff_t kb = 0;
        for (; kb + 16 <= k; kb += 16) {
            vf16 a0 = {0.0f}, a1 = {0.0f}, a2 = {0.0f}, a3 = {0.0f};
            vf16 a4 = {0.0f}, a5 = {0.0f}, a6 = {0.0f}, a7 = {0.0f};
            for (ptrdiff_t j = 0; j < d; j++) {
                vf16 c = loadu16(cent_t + j * k + kb);
                vf16 t;
                t = x0[j] - c; a0 = fma16(t, t, a0);
                t = x1[j] - c; a1 = fma16(t, t, a1);
                t = x2[j] - c; a2 = fma16(t, t, a2);
                t = x3[j] - c; a3 = fma16(t, t, a3);
                t = x4[j] - c; a4 = fma16(t, t, a4);
                t = x5[j] - c; a5 = fma16(t, t, a5);
                t = x6[j] - c; a6 = fma16(t, t, a6);
                t = x7[j] - c; a7 = fma16(t, t, a7);
            }
            __builtin_memcpy(scr + 0 * k + kb, &a0, 64); vm0 = vminsel(a0, vm0);
            __builtin_memcpy(scr + 1 * k + kb, &a1, 64); vm1 = vminsel(a1, vm1);
            __builtin_memcpy(scr + 2 * k + kb, &a2, 64); vm2 = vminsel(a2, vm2);
            __builtin_memcpy(scr + 3 * k + kb, &a3, 64); vm3 = vminsel(a3, vm3);
            __builtin_memcpy(scr + 4 * k + kb, &a4, 64); vm4 = vminsel(a4, vm4);
            __builtin_memcpy(scr + 5 * k + kb, &a5, 64); vm5 = vminsel(a5, vm5);
            __builtin_memcpy(scr + 6 * k + kb, &a6, 64); vm6 = vminsel(a6, vm6);
            __builtin_memcpy(scr + 7 * k + kb, &a7, 64); vm7 = vminsel(a7, vm7);
        }
        float mt[PT];
        mt[0] = hmin16(vm0); mt[1] = hmin16(vm1);
        mt[2] = hmin16(vm2); mt[3] = hmin16(vm3);
        mt[4] = hmin16(vm4); mt[5] = hmin16(vm5);
        mt[6] = hmin16(vm6); mt[7] = hmin16(vm7);
        for (; kb < k; kb++) {
            for (int t = 0; t < PT; t++) {
                const float *x = pts + (p0 + t) * d;
                float a = 0.0f;
                for (ptrdiff_t j = 0; j < d; j++) {
                    float u = x[j] - cent_t[j * k + kb];
                    a = a + u * u;
                }
                scr[t * k + kb] = a;
                mt[t] = a < mt[t] ? a : mt[t];
            }
        }
        for (int t = 0; t < PT; t++)
            select_exact(pts + (p0 + t) * d, d, cent64, k, scr + t * k, mt[t],
                         out_idx + p0 + t, out_sqd + p0 + t);
    }
    for (; p0 < n; p0++) {
        float m;
        screen_one(pts + p0 * d, d, cent_t, k, scr, &m);
        select_exact(pts + p0 * d, d, cent64, k, scr, m,
                     out_idx + p0, out_sqd + p0);
    }
    free(scr);
    return 0;
}

/* One seeding round: dmin[p] = min(dmin[p], sqdist(x_p, c)) followed by the
 * running cumulative sum of dmin written to cum. pts_t is the (d, n)
 * transposed float32 point matrix; c is one float64 centroid. Returns the
 * final cumulative total. All arithmetic matches the reference semantics:
 * each lane is one point's sequential-j float64 accumulation, and the
 * cumulative sum runs in ascending point order. */
double vq_seed_scan(const float *pts_t, ptrdiff_t n, ptrdiff_t d,
                    const double *c, double *dmin, double *cum) {
    double run = 0.0;
    ptrdiff_t p0 = 0;
    for (; p0 + 32 <= n; p0 += 32) {
        vd8 a0 = {0.0}, a1 = {0.0}, a2 = {0.0}, a3 = {0.0};
        for (ptrdiff_t j = 0; j < d; j++) {
            const float *row = pts_t + j * n + p0;
            vf8 f0, f1, f2, f3;
            __builtin_memcpy(&f0, row +  0, 32);
            __builtin_memcpy(&f1, row +  8, 32);
            __builtin_memcpy(&f2, row + 16, 32);
            __builtin_memcpy(&f3, row + 24, 32);
            double cj = c[j];
            vd8 t;
            t = __builtin_convertvector(f0, vd8) - cj; a0 = a0 + t * t;
            t = __builtin_convertvector(f1, vd8) - cj; a1 = a1 + t * t;
            t = __builtin_convertvector(f2, vd8) - cj; a2 = a2 + t * t;
            t = __builtin_convertvector(f3, vd8) - cj; a3 = a3 + t * t;
        }
        for (int l = 0; l < 8; l++) {
            double a = a0[l], *dp = dmin + p0 + l;
            if (a < *dp) *dp = a;
            run = run + *dp;
            cum[p0 + l] = run;
        }
        for (int l = 0; l < 8; l++) {
            double a = a1[l], *dp = dmin + p0 + 8 + l;
            if (a < *dp) *dp = a;
            run = run + *dp;
            cum[p0 + 8 + l] = run;
        }
        for (int l = 0; l < 8; l++) {
            double a = a2[l], *dp = dmin + p0 + 16 + l;
            if (a < *dp) *dp = a;
            run = run + *dp;
            cum[p0 + 16 + l] = run;
        }
        for (int l = 0; l < 8; l++) {
            double a = a3[l], *dp = dmin + p0 + 24 + l;
            if (a < *dp) *dp = a;
            run = run + *dp;
            cum[p0 + 24 + l] = run;
        }
    }
    for (; p0 < n; p0++) {
        double acc = 0.0;
        for (ptrdiff_t j = 0; j < d; j++) {
            double t = (double)pts_t[j * n + p0] - c[j];
            acc = acc + t * t;
        }
        if (acc < dmin[p0]) dmin[p0] = acc;
        run = run + dmin[p0];
        cum[p0] = run;
    }
    return run;
}
