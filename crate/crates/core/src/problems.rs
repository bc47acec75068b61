//! Manufactured Stokes problems on the unit square with closed-form data.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    /// Polynomial velocity, bilinear pressure.
    Polynomial,
    /// Trigonometric velocity and pressure.
    Trigonometric,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Polynomial => "problem1",
            ProblemId::Trigonometric => "problem2",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "problem1" | "1" | "p1" | "polynomial" => Ok(ProblemId::Polynomial),
            "problem2" | "2" | "p2" | "trigonometric" | "trig" => Ok(ProblemId::Trigonometric),
            other => Err(Error::Unknown { kind: "problem", name: other.to_string() }),
        }
    }
}

/// Exact velocity, velocity gradient (`grad[c][d] = d u_c / d x_d`) and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields<T> {
    pub u: [T; 2],
    pub grad_u: [[T; 2]; 2],
    pub p: T,
}

/// A manufactured problem together with its viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem<T> {
    pub id: ProblemId,
    pub nu: T,
}

// g(s) = s^2 (s-1)^2 and derivatives
fn g<T: Real>(s: T) -> [T; 4] {
    let (two, four, six, twelve) = (T::c(2.0), T::c(4.0), T::c(6.0), T::c(12.0));
    let s2 = s * s;
    let s3 = s2 * s;
    [
        s2 * s2 - two * s3 + s2,
        four * s3 - six * s2 + two * s,
        twelve * s2 - twelve * s + two,
        T::c(24.0) * s - twelve,
    ]
}

impl<T: Real> ManufacturedProblem<T> {
    pub fn new(id: ProblemId, nu: T) -> Result<Self, Error> {
        if !(nu > T::zero()) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
        }
        Ok(Self { id, nu })
    }

    pub fn exact(&self, x: [T; 2]) -> ExactFields<T> {
        let (a, b) = (x[0], x[1]);
        match self.id {
            ProblemId::Polynomial => {
                let five = T::c(5.0);
                let gx = g(a);
                let gy = g(b);
                let p = T::c(10.0) * (T::c(2.0) * a - T::one()) * (T::c(2.0) * b - T::one());
                ExactFields {
                    u: [five * gx[0] * gy[1], -five * gx[1] * gy[0]],
                    grad_u: [
                        [five * gx[1] * gy[1], five * gx[0] * gy[2]],
                        [-five * gx[2] * gy[0], -five * gx[1] * gy[1]],
                    ],
                    p,
                }
            }
            ProblemId::Trigonometric => {
                let pi = T::c(std::f64::consts::PI);
                let two = T::c(2.0);
                let (sx, cx) = (pi * a).sin_cos();
                let (sy, cy) = (pi * b).sin_cos();
                let (s2x, c2x) = (two * pi * a).sin_cos();
                let (s2y, c2y) = (two * pi * b).sin_cos();
                ExactFields {
                    u: [sx * sx * s2y, -s2x * sy * sy],
                    grad_u: [
                        [pi * s2x * s2y, two * pi * sx * sx * c2y],
                        [-two * pi * c2x * sy * sy, -pi * s2x * s2y],
                    ],
                    p: cx * cy,
                }
            }
        }
    }

    pub fn velocity(&self, x: [T; 2]) -> [T; 2] {
        self.exact(x).u
    }

    pub fn pressure(&self, x: [T; 2]) -> T {
        self.exact(x).p
    }

    /// `f = -nu Laplace u + grad p`.
    pub fn body_force(&self, x: [T; 2]) -> [T; 2] {
        let (a, b) = (x[0], x[1]);
        let nu = self.nu;
        match self.id {
            ProblemId::Polynomial => {
                let five = T::c(5.0);
                let twenty = T::c(20.0);
                let two = T::c(2.0);
                let gx = g(a);
                let gy = g(b);
                let lap1 = five * (gx[2] * gy[1] + gx[0] * gy[3]);
                let lap2 = -five * (gx[3] * gy[0] + gx[1] * gy[2]);
                [
                    -nu * lap1 + twenty * (two * b - T::one()),
                    -nu * lap2 + twenty * (two * a - T::one()),
                ]
            }
            ProblemId::Trigonometric => {
                let pi = T::c(std::f64::consts::PI);
                let two = T::c(2.0);
                let four = T::c(4.0);
                let pi2 = pi * pi;
                let (sx, cx) = (pi * a).sin_cos();
                let (sy, cy) = (pi * b).sin_cos();
                let (s2x, c2x) = (two * pi * a).sin_cos();
                let (s2y, c2y) = (two * pi * b).sin_cos();
                let lap1 = (four * pi2 * c2x - two * pi2) * s2y;
                let lap2 = s2x * (two * pi2 - four * pi2 * c2y);
                [-nu * lap1 - pi * sx * cy, -nu * lap2 - pi * cx * sy]
            }
        }
    }
}
