//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here works on plain row-major `Vec<c64>` matrices and avoids
//! the library's kernel, so agreement is evidence rather than tautology.
#![allow(dead_code)]

use tqet_core::c64;

pub const Z0: c64 = c64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<c64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Z0; n * n] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..n {
            m.a[k * n + k] = c64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> c64 {
        self.a[r * self.n + c]
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == Z0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Dense) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, o: &Dense) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn scale(&self, k: c64) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().map(|x| x * k).collect(),
        }
    }

    pub fn dagger(&self) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> c64 {
        (0..self.n).map(|k| self.a[k * self.n + k]).sum()
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * v[j]).sum())
            .collect()
    }

    pub fn max_diff(&self, o: &Dense) -> f64 {
        self.a
            .iter()
            .zip(&o.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn outer(v: &[c64], w: &[c64]) -> Dense {
        let n = v.len();
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[i * n + j] = v[i] * w[j].conj();
            }
        }
        out
    }
}

pub fn kron(x: &Dense, y: &Dense) -> Dense {
    let n = x.n * y.n;
    let mut out = Dense::zeros(n);
    for i in 0..x.n {
        for j in 0..x.n {
            for k in 0..y.n {
                for l in 0..y.n {
                    out.a[(i * y.n + k) * n + j * y.n + l] = x.at(i, j) * y.at(k, l);
                }
            }
        }
    }
    out
}

/// 'I', 'X', 'Y' or 'Z' as a 2x2 matrix.
pub fn pauli(label: char) -> Dense {
    let (o, l, i) = (Z0, c64::new(1.0, 0.0), c64::new(0.0, 1.0));
    let a = match label {
        'I' => vec![l, o, o, l],
        'X' => vec![o, l, l, o],
        'Y' => vec![o, -i, i, o],
        'Z' => vec![l, o, o, -l],
        _ => panic!("bad label"),
    };
    Dense { n: 2, a }
}

/// Kronecker product of single-site factors, site 1 leftmost.
pub fn string(n_sites: usize, ops: &[(usize, char)]) -> Dense {
    let mut out = Dense::eye(1);
    for site in 1..=n_sites {
        let mut factor = pauli('I');
        for &(s, p) in ops {
            if s == site {
                factor = factor.mul(&pauli(p));
            }
        }
        out = kron(&out, &factor);
    }
    out
}

pub fn ising(n: usize, j: f64, h: f64, g: f64) -> Dense {
    let mut out = Dense::zeros(1 << n);
    let r = |x: f64| c64::new(x, 0.0);
    for s in 1..n {
        out = out.add(&string(n, &[(s, 'Z'), (s + 1, 'Z')]).scale(r(-j)));
    }
    for s in 1..=n {
        out = out.add(&string(n, &[(s, 'Z')]).scale(r(-h)));
        out = out.add(&string(n, &[(s, 'X')]).scale(r(-g)));
    }
    out
}

pub fn bob_hamiltonian(n: usize, b: usize, j: f64, h: f64, g: f64) -> Dense {
    let r = |x: f64| c64::new(x, 0.0);
    string(n, &[(b, 'Z'), (b - 1, 'Z')])
        .scale(r(-j))
        .add(&string(n, &[(b, 'Z'), (b + 1, 'Z')]).scale(r(-j)))
        .add(&string(n, &[(b, 'Z')]).scale(r(-h)))
        .add(&string(n, &[(b, 'X')]).scale(r(-g)))
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real
/// `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`; every eigenvalue appears
/// twice there, so every second one is returned. Ascending.
pub fn jacobi_eigenvalues(m: &Dense) -> Vec<f64> {
    let n = m.n;
    let d = 2 * n;
    let mut a = vec![0.0_f64; d * d];
    for i in 0..n {
        for j in 0..n {
            let z = m.at(i, j);
            a[i * d + j] = z.re;
            a[(i + n) * d + j + n] = z.re;
            a[i * d + j + n] = -z.im;
            a[(i + n) * d + j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k * d + p], a[k * d + q]);
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p * d + k], a[q * d + k]);
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|k| a[k * d + k]).collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

/// `exp(-i H t) v` by power series with enough terms to reach machine precision.
pub fn taylor_evolve(h: &Dense, v: &[c64], t: f64) -> Vec<c64> {
    // split into steps with |H| dt small so the series converges fast
    let bound: f64 = (0..h.n)
        .map(|i| (0..h.n).map(|j| h.at(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let steps = ((bound * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut state = v.to_vec();
    for _ in 0..steps {
        let mut term = state.clone();
        let mut acc = state.clone();
        for k in 1..60 {
            let hv = h.apply(&term);
            let factor = c64::new(0.0, -dt / k as f64);
            term = hv.iter().map(|x| x * factor).collect();
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += x;
            }
            if term.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-18 {
                break;
            }
        }
        state = acc;
    }
    state
}

/// `exp(-i H t)` column by column.
pub fn taylor_propagator(h: &Dense, t: f64) -> Dense {
    let n = h.n;
    let mut out = Dense::zeros(n);
    for j in 0..n {
        let mut e = vec![Z0; n];
        e[j] = c64::new(1.0, 0.0);
        let col = taylor_evolve(h, &e, t);
        for i in 0..n {
            out.a[i * n + j] = col[i];
        }
    }
    out
}

/// Lowest eigenvector by inverse-free power iteration on `shift - H`.
pub fn ground_vector(h: &Dense) -> Vec<c64> {
    let bound: f64 = (0..h.n)
        .map(|i| (0..h.n).map(|j| h.at(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut v: Vec<c64> = (0..h.n)
        .map(|k| c64::new(1.0 + 0.01 * k as f64, 0.003 * k as f64))
        .collect();
    for _ in 0..20000 {
        let hv = h.apply(&v);
        let w: Vec<c64> = v.iter().zip(&hv).map(|(x, y)| x * bound - y).collect();
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    v
}

pub fn inner(v: &[c64], w: &[c64]) -> c64 {
    v.iter().zip(w).map(|(x, y)| x.conj() * y).sum()
}

pub fn to_vec(v: &tqet_core::kernel::CVector) -> Vec<c64> {
    v.as_slice().to_vec()
}

pub fn from_cmatrix(m: &tqet_core::kernel::CMatrix) -> Dense {
    let n = m.dim();
    let mut out = Dense::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.a[i * n + j] = m.get(i, j);
        }
    }
    out
}
