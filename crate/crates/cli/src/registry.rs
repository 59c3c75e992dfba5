//! Named test functions and domains.
//!
//! The six two-variable functions are the standard benchmark set with known
//! minima over `[-1, 1]^2`; `constant5` and `quartic` are closure and
//! accelerated-rate probes.

use lasserre_core::{DomainSpec, Polynomial};

/// A named polynomial with its known minimum over the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub f: Polynomial,
    /// Minimum over `[-1, 1]^n`.
    pub f_min: f64,
    /// Points of `[-1, 1]^n` where the minimum is attained.
    pub minimizers: Vec<Vec<f64>>,
}

impl RegistryEntry {
    /// `f_min` when it is also the minimum over `d`: always for constants,
    /// otherwise when `d ⊆ [-1, 1]^n` contains one of the minimizers.
    pub fn f_min_on(&self, d: &DomainSpec) -> Option<f64> {
        if self.f.degree() == 0 {
            return Some(self.f_min);
        }
        let (lo, hi) = d.bounding_box();
        let inside_box = lo.iter().all(|&v| v >= -1.0 - 1e-12) && hi.iter().all(|&v| v <= 1.0 + 1e-12);
        (inside_box && self.minimizer_in(d).is_some()).then_some(self.f_min)
    }

    /// First listed minimizer that lies in `d`.
    pub fn minimizer_in(&self, d: &DomainSpec) -> Option<&[f64]> {
        self.minimizers
            .iter()
            .find(|a| a.len() == d.n_vars() && d.contains(a, 1e-12))
            .map(|a| a.as_slice())
    }
}

/// Names of the six benchmark functions, in table order.
pub const TABLE2: [&str; 6] = ["linear", "quadratic", "booth", "matyas", "camel", "motzkin"];

/// Every function name known to [`function`].
pub const FUNCTIONS: [&str; 8] = ["linear", "quadratic", "booth", "matyas", "camel", "motzkin", "constant5", "quartic"];

/// Every domain name known to [`domain`].
pub const DOMAINS: [&str; 6] = ["box1", "box2", "ball2", "simplex2", "octagon", "interval01"];

fn poly(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
    Polynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).expect("registry literal")
}

/// Looks up `name` as an `n`-variable function.
///
/// `linear`, `constant5` and `quartic` (`x_1^4`) exist for every `n`,
/// `quadratic` for `n >= 2`, and the rest only for `n = 2`.
pub fn function(name: &str, n: usize) -> Option<RegistryEntry> {
    if n == 0 {
        return None;
    }
    let unit = |i: usize, v: f64| {
        let mut e = vec![0u32; n];
        e[i] = 1;
        let mut x = vec![0.0; n];
        x[i] = v;
        (e, x)
    };
    let entry = match name {
        "linear" => {
            let (e, a) = unit(0, -1.0);
            RegistryEntry {
                name: "linear",
                f: Polynomial::monomial(n, e, 1.0),
                f_min: -1.0,
                minimizers: vec![a],
            }
        }
        "quadratic" if n >= 2 => {
            let (_, a) = unit(0, -1.0);
            let mut sq = vec![0u32; n];
            sq[1] = 2;
            RegistryEntry {
                name: "quadratic",
                f: &Polynomial::var(n, 0) + &Polynomial::monomial(n, sq, 1.0),
                f_min: -1.0,
                minimizers: vec![a],
            }
        }
        "booth" if n == 2 => {
            let a = poly(2, &[(&[1, 0], 10.0), (&[0, 1], 20.0), (&[0, 0], -7.0)]);
            let b = poly(2, &[(&[1, 0], 20.0), (&[0, 1], 10.0), (&[0, 0], -5.0)]);
            RegistryEntry {
                name: "booth",
                f: &(&a * &a) + &(&b * &b),
                f_min: 0.0,
                minimizers: vec![vec![0.1, 0.3]],
            }
        }
        "matyas" if n == 2 => RegistryEntry {
            name: "matyas",
            f: poly(2, &[(&[2, 0], 26.0), (&[0, 2], 26.0), (&[1, 1], -48.0)]),
            f_min: 0.0,
            minimizers: vec![vec![0.0, 0.0]],
        },
        "camel" if n == 2 => RegistryEntry {
            name: "camel",
            f: poly(
                2,
                &[
                    (&[2, 0], 50.0),
                    (&[4, 0], -2625.0 / 4.0),
                    (&[6, 0], 15625.0 / 6.0),
                    (&[1, 1], 25.0),
                    (&[0, 2], 25.0),
                ],
            ),
            f_min: 0.0,
            minimizers: vec![vec![0.0, 0.0]],
        },
        "motzkin" if n == 2 => RegistryEntry {
            name: "motzkin",
            f: poly(2, &[(&[4, 2], 64.0), (&[2, 4], 64.0), (&[2, 2], -48.0), (&[0, 0], 1.0)]),
            f_min: 0.0,
            minimizers: [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]
                .iter()
                .map(|p| p.to_vec())
                .collect(),
        },
        "constant5" => RegistryEntry {
            name: "constant5",
            f: Polynomial::constant(n, 5.0),
            f_min: 5.0,
            minimizers: vec![vec![0.0; n]],
        },
        "quartic" => {
            let mut e = vec![0u32; n];
            e[0] = 4;
            RegistryEntry {
                name: "quartic",
                f: Polynomial::monomial(n, e, 1.0),
                f_min: 0.0,
                minimizers: vec![vec![0.0; n]],
            }
        }
        _ => return None,
    };
    Some(entry)
}

/// Looks up a named domain.
pub fn domain(name: &str) -> Option<DomainSpec> {
    Some(match name {
        "box1" => DomainSpec::unit_box(1),
        "box2" => DomainSpec::unit_box(2),
        "ball2" => DomainSpec::unit_ball(2),
        "simplex2" => DomainSpec::standard_simplex(2),
        "octagon" => DomainSpec::octagon(),
        "interval01" => DomainSpec::axis_box(vec![0.0], vec![1.0]).ok()?,
        _ => return None,
    })
}
