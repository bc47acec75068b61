//! Symmetric quadrature rules on the reference triangle.

use crate::scalar::Real;

/// Points are barycentric triples; weights sum to 1 and are multiplied by the
/// physical triangle area at use.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// One orbit of a symmetric rule: centroid, `(a, a, 1-2a)` or `(a, b, 1-a-b)`.
enum Orbit {
    Centroid(f64),
    Two(f64, f64),
    Three(f64, f64, f64),
}

fn expand<T: Real>(orbits: &[Orbit], degree: usize) -> QuadratureRule<T> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => {
                let t = 1.0 / 3.0;
                points.push([t, t, t]);
                weights.push(w);
            }
            Orbit::Two(a, w) => {
                let b = 1.0 - 2.0 * a;
                for p in [[a, a, b], [a, b, a], [b, a, a]] {
                    points.push(p);
                    weights.push(w);
                }
            }
            Orbit::Three(a, b, w) => {
                let c = 1.0 - a - b;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    points.push(p);
                    weights.push(w);
                }
            }
        }
    }
    QuadratureRule {
        points: points.into_iter().map(|p| p.map(T::c)).collect(),
        weights: weights.into_iter().map(T::c).collect(),
        degree,
    }
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Smallest built-in rule exact for polynomials of degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        match degree {
            0 | 1 => expand(&[Orbit::Centroid(1.0)], 1),
            2 => expand(&[Orbit::Two(1.0 / 6.0, 1.0 / 3.0)], 2),
            3 | 4 => expand(
                &[
                    Orbit::Two(0.445948490915965, 0.223381589678011),
                    Orbit::Two(0.091576213509771, 0.109951743655322),
                ],
                4,
            ),
            5 => expand(
                &[
                    Orbit::Centroid(0.225),
                    Orbit::Two(0.470142064105115, 0.132394152788506),
                    Orbit::Two(0.101286507323456, 0.125939180544827),
                ],
                5,
            ),
            _ => expand(
                &[
                    Orbit::Centroid(0.144315607677787),
                    Orbit::Two(0.459292588292723, 0.095091634267285),
                    Orbit::Two(0.170569307751760, 0.103217370534718),
                    Orbit::Two(0.050547228317031, 0.032458497623198),
                    Orbit::Three(0.008394777409958, 0.263112829634638, 0.027230314174435),
                ],
                8,
            ),
        }
    }
}
