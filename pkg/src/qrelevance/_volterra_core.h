/* Inner history sum for the memory-kernel stepper.
 * Kernel blocks are stored transposed, split into real/imag planes:
 * K_k[i, j] = Kr[k*r*r + j*r + i] + i Ki[...]. History row t holds y_t.
 * Computes s1 = sum_{k=0..m} K_k y_{m-k} and s2 = sum_{k=0..m} K_{k+1} y_{m-k}
 * (no trapezoid corrections; the caller applies them). */
#ifndef QRELEVANCE_VOLTERRA_CORE_H
#define QRELEVANCE_VOLTERRA_CORE_H

static void qr_history_sums(int m, int r,
                            const double *restrict Kr, const double *restrict Ki,
                            const double *restrict hr, const double *restrict hi,
                            double *restrict s1r, double *restrict s1i,
                            double *restrict s2r, double *restrict s2i)
{
    const long blk = (long)r * r;
    for (int i = 0; i < r; ++i) { s1r[i] = 0.0; s1i[i] = 0.0; s2r[i] = 0.0; s2i[i] = 0.0; }
    for (int k = 0; k <= m; ++k) {
        const double *restrict ar = Kr + k * blk;
        const double *restrict ai = Ki + k * blk;
        const double *restrict br = ar + blk;
        const double *restrict bi = ai + blk;
        const double *restrict yr = hr + (long)(m - k) * r;
        const double *restrict yi = hi + (long)(m - k) * r;
        for (int j = 0; j < r; ++j) {
            const double a = yr[j], b = yi[j];
            const double *restrict arj = ar + (long)j * r;
            const double *restrict aij = ai + (long)j * r;
            const double *restrict brj = br + (long)j * r;
            const double *restrict bij = bi + (long)j * r;
            for (int i = 0; i < r; ++i) {
                s1r[i] += arj[i] * a - aij[i] * b;
                s1i[i] += arj[i] * b + aij[i] * a;
                s2r[i] += brj[i] * a - bij[i] * b;
                s2i[i] += brj[i] * b + bij[i] * a;
            }
        }
    }
}

#endif
