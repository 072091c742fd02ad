//! Independent coordinate-space oracles: Christoffel symbols and Riemann
//! tensor by central finite differences of the metric, mapped to the frame.

#![allow(dead_code)]

use nullframe::nullframe::NullCoframe;
use nullframe::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CHART: [&str; 4] = ["u", "x", "y", "r"];

/// Minkowski null coframe plus small smooth random perturbations.
pub fn random_coframe(seed: u64, eps: f64) -> NullCoframe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wave = |complex: bool| -> String {
        let mut terms = Vec::new();
        for _ in 0..2 {
            let k: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let ph: f64 = rng.gen_range(-1.0..1.0);
            let re: f64 = eps * rng.gen_range(-1.0..1.0);
            let amp = if complex {
                let im: f64 = eps * rng.gen_range(-1.0..1.0);
                format!("({re:.6} + i*{im:.6})")
            } else {
                format!("{re:.6}")
            };
            terms.push(format!(
                "{amp}*sin({:.6}*u + {:.6}*x + {:.6}*y + {:.6}*r + {ph:.6})",
                k[0], k[1], k[2], k[3]
            ));
        }
        let q: f64 = eps * rng.gen_range(-1.0..1.0);
        terms.push(format!("{q:.6}*x*r"));
        terms.join(" + ")
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let base1 = [
        "0".to_string(),
        format!("{s}"),
        format!("i*{s}"),
        "0".to_string(),
    ];
    let t1: Vec<String> = base1
        .iter()
        .map(|b| format!("{b} + {}", wave(true)))
        .collect();
    let t3: Vec<String> = ["1", "0", "0", "0"]
        .iter()
        .map(|b| format!("{b} + {}", wave(false)))
        .collect();
    let t4: Vec<String> = ["0", "0", "0", "1"]
        .iter()
        .map(|b| format!("{b} + {}", wave(false)))
        .collect();
    fn r(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    NullCoframe::from_exprs(&CHART, &r(&t1), &r(&t3), &r(&t4)).unwrap()
}

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

/// Fourth-order central difference of a vector-valued function along `k`.
pub fn fd4(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let a = f(&shifted(x, k, -2.0 * h));
    let b = f(&shifted(x, k, -h));
    let c = f(&shifted(x, k, h));
    let d = f(&shifted(x, k, 2.0 * h));
    (0..a.len())
        .map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
        .collect()
}

fn real_metric(cf: &NullCoframe, x: &[f64]) -> Vec<f64> {
    let g = cf.metric(x).unwrap();
    let mut out = Vec::with_capacity(16);
    for row in &g {
        for v in row {
            assert!(v.im.abs() < 1e-12, "metric not real");
            out.push(v.re);
        }
    }
    out
}

fn inverse4(m: &[f64]) -> Vec<f64> {
    // Gauss-Jordan on a 4x8 augmented matrix
    let mut a = vec![[0.0f64; 8]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = m[4 * i + j];
        }
        a[i][4 + i] = 1.0;
    }
    for c in 0..4 {
        let p = (c..4)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for x in a[c].iter_mut() {
            *x /= d;
        }
        for r in 0..4 {
            if r != c {
                let f = a[r][c];
                let pivot = a[c];
                for (x, p) in a[r].iter_mut().zip(pivot) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut out = vec![0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            out[4 * i + j] = a[i][4 + j];
        }
    }
    out
}

/// `Γ^ρ_μν` flattened as `[ρ][μ][ν]`.
pub fn christoffel(cf: &NullCoframe, x: &[f64], h: f64) -> Vec<f64> {
    let g = real_metric(cf, x);
    let gi = inverse4(&g);
    let metric = |y: &[f64]| real_metric(cf, y);
    let dg: Vec<Vec<f64>> = (0..4).map(|k| fd4(&metric, x, k, h)).collect();
    let mut out = vec![0.0; 64];
    for rho in 0..4 {
        for mu in 0..4 {
            for nu in 0..4 {
                let mut s = 0.0;
                for sig in 0..4 {
                    s += gi[4 * rho + sig]
                        * (dg[mu][4 * sig + nu] + dg[nu][4 * sig + mu] - dg[sig][4 * mu + nu]);
                }
                out[16 * rho + 4 * mu + nu] = 0.5 * s;
            }
        }
    }
    out
}

/// `R^ρ_σμν` flattened as `[ρ][σ][μ][ν]`.
pub fn coordinate_riemann(cf: &NullCoframe, x: &[f64], h: f64) -> Vec<f64> {
    let gam = christoffel(cf, x, h);
    let chr = |y: &[f64]| christoffel(cf, y, h);
    let dgam: Vec<Vec<f64>> = (0..4).map(|k| fd4(&chr, x, k, h)).collect();
    let ix = |a: usize, b: usize, c: usize| 16 * a + 4 * b + c;
    let mut out = vec![0.0; 256];
    for rho in 0..4 {
        for sig in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    let mut v = dgam[mu][ix(rho, nu, sig)] - dgam[nu][ix(rho, mu, sig)];
                    for lam in 0..4 {
                        v += gam[ix(rho, mu, lam)] * gam[ix(lam, nu, sig)]
                            - gam[ix(rho, nu, lam)] * gam[ix(lam, mu, sig)];
                    }
                    out[64 * rho + 16 * sig + 4 * mu + nu] = v;
                }
            }
        }
    }
    out
}

/// Coframe values `θ^i_μ` and frame values `e_j^μ` at a point.
pub fn frame_values(cf: &NullCoframe, x: &[f64]) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let fr = cf.at(x, 0).unwrap();
    let th = fr.theta.iter().map(|t| t.values()).collect();
    let e = fr
        .frame
        .iter()
        .map(|row| row.iter().map(|j| j.value()).collect())
        .collect();
    (th, e)
}

/// `R^i_jkl` in the frame from the coordinate finite-difference Riemann tensor.
pub fn frame_riemann_oracle(cf: &NullCoframe, x: &[f64], h: f64) -> Vec<C64> {
    let r = coordinate_riemann(cf, x, h);
    let (th, e) = frame_values(cf, x);
    let mut out = vec![C64::new(0.0, 0.0); 256];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut s = C64::new(0.0, 0.0);
                    for rho in 0..4 {
                        for sig in 0..4 {
                            for mu in 0..4 {
                                for nu in 0..4 {
                                    s += th[i][rho]
                                        * r[64 * rho + 16 * sig + 4 * mu + nu]
                                        * e[j][sig]
                                        * e[k][mu]
                                        * e[l][nu];
                                }
                            }
                        }
                    }
                    out[64 * i + 16 * j + 4 * k + l] = s;
                }
            }
        }
    }
    out
}

/// `Γ^i_j(e_k) = θ^i_ρ (e_k^μ ∂_μ e_j^ρ + Γ^ρ_μσ e_k^μ e_j^σ)`.
pub fn frame_connection_oracle(cf: &NullCoframe, x: &[f64], h: f64) -> Vec<C64> {
    let gam = christoffel(cf, x, h);
    let (th, e) = frame_values(cf, x);
    // ∂_μ e_j^ρ as real and imaginary parts
    let frame_flat = |y: &[f64]| -> Vec<f64> {
        let (_, e) = frame_values(cf, y);
        e.iter().flatten().flat_map(|c| [c.re, c.im]).collect()
    };
    let de: Vec<Vec<f64>> = (0..4).map(|k| fd4(&frame_flat, x, k, h)).collect();
    let de_at = |mu: usize, j: usize, rho: usize| {
        let b = 2 * (4 * j + rho);
        C64::new(de[mu][b], de[mu][b + 1])
    };
    let mut out = vec![C64::new(0.0, 0.0); 64];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for rho in 0..4 {
                    let mut inner = C64::new(0.0, 0.0);
                    for mu in 0..4 {
                        inner += e[k][mu] * de_at(mu, j, rho);
                        for sig in 0..4 {
                            inner += gam[16 * rho + 4 * mu + sig] * e[k][mu] * e[j][sig];
                        }
                    }
                    s += th[i][rho] * inner;
                }
                out[16 * i + 4 * j + k] = s;
            }
        }
    }
    out
}
