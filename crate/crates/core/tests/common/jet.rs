//! Second-order forward-mode jets in `(x, y, t)` and the strong-form residual
//! of the manufactured solution built on them.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use mrbc_core::problems::{manufactured_forcing, Forcing};
use mrbc_core::scheme::PhysicalParams;
use rand::Rng;

/// Value, gradient and Hessian with respect to `(x, y, t)`.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            d: [0.0; 3],
            h: [[0.0; 3]; 3],
        }
    }

    pub fn variable(v: f64, k: usize) -> Self {
        let mut j = Jet::constant(v);
        j.d[k] = 1.0;
        j
    }

    /// Chain rule for `f(self)` given `f`, `f'`, `f''` at the value.
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet::constant(f0);
        for a in 0..3 {
            out.d[a] = f1 * self.d[a];
            for b in 0..3 {
                out.h[a][b] = f1 * self.h[a][b] + f2 * self.d[a] * self.d[b];
            }
        }
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(c, -s, -c)
    }

    pub fn scale(self, k: f64) -> Self {
        self * Jet::constant(k)
    }

    pub fn dx(&self) -> f64 {
        self.d[0]
    }

    pub fn dy(&self) -> f64 {
        self.d[1]
    }

    pub fn dt(&self) -> f64 {
        self.d[2]
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for a in 0..3 {
            self.d[a] += o.d[a];
            for b in 0..3 {
                self.h[a][b] += o.h[a][b];
            }
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for a in 0..3 {
            out.d[a] = self.d[a] * o.v + self.v * o.d[a];
            for b in 0..3 {
                out.h[a][b] = self.h[a][b] * o.v
                    + self.v * o.h[a][b]
                    + self.d[a] * o.d[b]
                    + self.d[b] * o.d[a];
            }
        }
        out
    }
}

/// The manufactured fields written from scratch on jets.
pub struct Fields {
    pub u: [Jet; 2],
    pub p: Jet,
    pub w: Jet,
    pub th: Jet,
}

pub fn fields(x: f64, y: f64, t: f64) -> Fields {
    let (x, y, t) = (
        Jet::variable(x, 0),
        Jet::variable(y, 1),
        Jet::variable(t, 2),
    );
    let a = x.scale(2.0 * PI) + t;
    let b = y.scale(2.0 * PI) + t;
    let c = (x - y).scale(2.0 * PI) + t;
    Fields {
        u: [a.sin() * b.sin(), a.cos() * b.cos()],
        p: c.sin(),
        w: a.sin() * b.sin(),
        th: a.cos() * b.cos(),
    }
}

/// Largest of the three component-wise relative residuals at one point,
/// each scaled by `max(1, |source|)`.
pub fn strong_residual_sample(params: &PhysicalParams, f: &Forcing, x: f64, y: f64, t: f64) -> f64 {
    let PhysicalParams {
        chi,
        mu,
        upsilon,
        zeta,
        kappa,
        e,
        ..
    } = *params;
    let Fields { u, p, w, th } = fields(x, y, t);
    let (u1, u2) = (u[0].v, u[1].v);
    let adv = |j: &Jet| u1 * j.dx() + u2 * j.dy();
    let curl_w = [w.dy(), -w.dx()];
    let curl_u = u[1].dx() - u[0].dy();
    let grad_p = [p.dx(), p.dy()];

    let fu = f.velocity.as_ref().expect("velocity source").eval(x, y, t);
    let fw = f
        .angular
        .as_ref()
        .expect("angular source")
        .eval_scalar(x, y, t);
    let ft = f
        .temperature
        .as_ref()
        .expect("temperature source")
        .eval_scalar(x, y, t);

    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let lhs = u[k].dt() + adv(&u[k]) - (chi + mu) * u[k].laplacian() + grad_p[k]
            - 2.0 * chi * curl_w[k]
            - th.v * e[k];
        worst = worst.max((lhs - fu[k]).abs() / fu[k].abs().max(1.0));
    }
    let lhs_w = zeta * w.dt() + zeta * adv(&w) - upsilon * w.laplacian() + 4.0 * chi * w.v
        - 2.0 * chi * curl_u;
    worst = worst.max((lhs_w - fw).abs() / fw.abs().max(1.0));
    let lhs_t = th.dt() + adv(&th) - kappa * th.laplacian() - (u1 * e[0] + u2 * e[1]);
    worst.max((lhs_t - ft).abs() / ft.abs().max(1.0))
}

/// Worst relative residual over `n` random points of `[0,1]^2 x [0,1]`.
pub fn residuals(params: &PhysicalParams, rng: &mut impl Rng, n: usize) -> f64 {
    let f = manufactured_forcing(params);
    (0..n)
        .map(|_| strong_residual_sample(params, &f, rng.gen(), rng.gen(), rng.gen()))
        .fold(0.0, f64::max)
}
