#include "mts/errors.hpp"
#include "mts/linalg.hpp"

#include <cmath>
#include <limits>

namespace mts {
namespace {

double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Diagonal similarity by powers of two so row and column norms are comparable.
void balance(Matrix& a) {
    constexpr double radix = 2.0;
    constexpr double radix_sq = radix * radix;
    const Eigen::Index n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix_sq;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix_sq;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

}  // namespace

void hessenberg_reduce(Matrix& a) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index k = 0; k + 2 < n; ++k) {
        const Eigen::Index m = n - k - 1;
        Vector v = a.col(k).tail(m);
        const double alpha = v.norm();
        if (alpha == 0.0) continue;
        const double beta = v[0] >= 0.0 ? -alpha : alpha;
        v[0] -= beta;
        const double vnorm2 = v.squaredNorm();
        if (vnorm2 == 0.0) continue;
        // H = I - 2 v v^T / (v^T v), applied on both sides.
        a.bottomRightCorner(m, n - k) -= (2.0 / vnorm2) * v * (v.transpose() * a.bottomRightCorner(m, n - k));
        a.rightCols(m) -= (2.0 / vnorm2) * (a.rightCols(m) * v) * v.transpose();
        a.col(k).tail(m - 1).setZero();
        a(k + 1, k) = beta;
    }
}

Spectrum eigenvalues(const Matrix& input) {
    if (input.rows() != input.cols()) throw InputError("eigenvalues: matrix must be square");
    if (!input.allFinite()) throw InputError("eigenvalues: matrix has non-finite entries");
    const int n = static_cast<int>(input.rows());
    Spectrum w(static_cast<std::size_t>(n));
    if (n == 0) return w;

    Matrix a = input;
    balance(a);
    hessenberg_reduce(a);

    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_sweeps = 60;
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;  // accumulated exceptional shifts
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            // Look for a single small subdiagonal element.
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                w[nn--] = Complex(x + t, 0.0);
            } else {
                double y = a(nn - 1, nn - 1);
                double ww = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    // 2x2 block deflates: solve its characteristic polynomial.
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        w[nn - 1] = w[nn] = Complex(x + z, 0.0);
                        if (z != 0.0) w[nn] = Complex(x - ww / z, 0.0);
                    } else {
                        w[nn] = Complex(x + p, -z);
                        w[nn - 1] = std::conj(w[nn]);
                    }
                    nn -= 2;
                } else {
                    if (its == max_sweeps)
                        throw NumericalError("eigenvalues: QR iteration did not converge");
                    if (its % 10 == 0 && its > 0) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) a(i + 2, i - 1) = 0.0;
                    }
                    // Double-shift QR sweep on rows/columns l..nn, chasing the bulge.
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k + 1 != nn) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return w;
}

}  // namespace mts
