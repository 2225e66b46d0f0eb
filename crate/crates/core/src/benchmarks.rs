//! Builtin benchmark problems: a BBOB-shaped single-objective subset and a
//! bi-objective double sphere.
//!
//! The BBOB functions are implemented without rotations or non-linear
//! transformations. Instance 0 is transformation-free (`x* = 0`, `f* = 0`);
//! instance `k > 0` draws `x*` uniformly from `[-4, 4]^d` and `f*` from
//! `[-100, 100]` using a generator seeded by `(function_id, instance, dimension)`.

use rand::Rng;
use thiserror::Error;

use crate::num::Real;
use crate::problem::{Problem, ProblemError};
use crate::sampler::{derived_rng, splitmix64};
use crate::space::{Direction, Distribution, ParamValue, Params, SearchSpace};

pub const DOMAIN: (f64, f64) = (-5.0, 5.0);
pub const SUPPORTED_FUNCTIONS: [u32; 4] = [1, 2, 3, 8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchmarkError {
    #[error("unsupported function_id {0}; supported: 1, 2, 3, 8")]
    UnsupportedFunction(u32),
    #[error("dimension must be >= 1")]
    ZeroDimension,
    #[error("offset must lie in (0, 4], got {0}")]
    OffsetOutOfRange(f64),
}

pub fn sphere<T: Real>(z: &[T]) -> T {
    z.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

/// `sum 10^(6 (i-1)/(d-1)) z_i^2`, reducing to `z^2` when `d = 1`.
pub fn ellipsoid<T: Real>(z: &[T]) -> T {
    let d = z.len();
    if d == 1 {
        return z[0] * z[0];
    }
    let ten = T::lit(10.0);
    let denom = T::lit((d - 1) as f64);
    z.iter().enumerate().fold(T::zero(), |acc, (i, &v)| {
        let exponent = T::lit(6.0) * T::lit(i as f64) / denom;
        acc + ten.powf(exponent) * v * v
    })
}

pub fn rastrigin<T: Real>(z: &[T]) -> T {
    let ten = T::lit(10.0);
    let two_pi = T::lit(2.0) * T::PI();
    z.iter().fold(ten * T::lit(z.len() as f64), |acc, &v| {
        acc + v * v - ten * (two_pi * v).cos()
    })
}

/// Rosenbrock with its optimum at `z = (1, .., 1)`.
pub fn rosenbrock<T: Real>(z: &[T]) -> T {
    let hundred = T::lit(100.0);
    z.windows(2).fold(T::zero(), |acc, w| {
        let a = w[1] - w[0] * w[0];
        let b = w[0] - T::one();
        acc + hundred * a * a + b * b
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbobFunction {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Rosenbrock,
}

impl BbobFunction {
    pub fn from_id(function_id: u32) -> Result<Self, BenchmarkError> {
        match function_id {
            1 => Ok(BbobFunction::Sphere),
            2 => Ok(BbobFunction::Ellipsoid),
            3 => Ok(BbobFunction::Rastrigin),
            8 => Ok(BbobFunction::Rosenbrock),
            other => Err(BenchmarkError::UnsupportedFunction(other)),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            BbobFunction::Sphere => 1,
            BbobFunction::Ellipsoid => 2,
            BbobFunction::Rastrigin => 3,
            BbobFunction::Rosenbrock => 8,
        }
    }

    pub fn raw<T: Real>(self, z: &[T]) -> T {
        match self {
            BbobFunction::Sphere => sphere(z),
            BbobFunction::Ellipsoid => ellipsoid(z),
            BbobFunction::Rastrigin => rastrigin(z),
            BbobFunction::Rosenbrock => rosenbrock(z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub function_id: u32,
    pub dimension: usize,
    pub instance: u64,
}

impl BenchmarkSpec {
    pub fn new(function_id: u32, dimension: usize, instance: u64) -> Self {
        Self {
            function_id,
            dimension,
            instance,
        }
    }
}

fn box_space(dimension: usize) -> SearchSpace {
    let mut space = SearchSpace::new();
    for i in 0..dimension {
        space
            .add(format!("x{i}"), Distribution::float(DOMAIN.0, DOMAIN.1))
            .expect("benchmark space is valid");
    }
    space
}

fn read_point<T: Real>(space: &SearchSpace, params: &Params) -> Result<Vec<T>, ProblemError> {
    space.check(params)?;
    Ok(space
        .names()
        .map(|name| match &params[name] {
            ParamValue::Float(x) => T::lit(*x),
            _ => unreachable!("checked against a float-only space"),
        })
        .collect())
}

/// A BBOB-style problem instance over scalar type `T`.
#[derive(Debug, Clone)]
pub struct BbobProblem<T: Real> {
    spec: BenchmarkSpec,
    function: BbobFunction,
    optimum: Vec<T>,
    shift: Vec<T>,
    f_opt: T,
    space: SearchSpace,
    directions: Vec<Direction>,
}

impl<T: Real> BbobProblem<T> {
    pub fn new(spec: BenchmarkSpec) -> Result<Self, BenchmarkError> {
        let function = BbobFunction::from_id(spec.function_id)?;
        if spec.dimension == 0 {
            return Err(BenchmarkError::ZeroDimension);
        }
        let (optimum, f_opt) = instance_optimum(spec);
        let shift = optimum
            .iter()
            .map(|&x| match function {
                BbobFunction::Rosenbrock => x - 1.0,
                _ => x,
            })
            .map(T::lit)
            .collect();
        Ok(Self {
            spec,
            function,
            optimum: optimum.into_iter().map(T::lit).collect(),
            shift,
            f_opt: T::lit(f_opt),
            space: box_space(spec.dimension),
            directions: vec![Direction::Minimize],
        })
    }

    pub fn spec(&self) -> BenchmarkSpec {
        self.spec
    }

    pub fn function(&self) -> BbobFunction {
        self.function
    }

    /// Location of the global optimum.
    pub fn optimum(&self) -> &[T] {
        &self.optimum
    }

    pub fn optimal_value(&self) -> T {
        self.f_opt
    }

    pub fn value_at(&self, x: &[T]) -> T {
        let z: Vec<T> = x.iter().zip(&self.shift).map(|(&a, &s)| a - s).collect();
        self.function.raw(&z) + self.f_opt
    }

    /// Params assigning the optimum location.
    pub fn optimum_params(&self) -> Params {
        self.space
            .names()
            .zip(&self.optimum)
            .map(|(n, &x)| (n.to_owned(), ParamValue::Float(x.as_f64())))
            .collect()
    }
}

fn instance_optimum(spec: BenchmarkSpec) -> (Vec<f64>, f64) {
    if spec.instance == 0 {
        return (vec![0.0; spec.dimension], 0.0);
    }
    let key = splitmix64(u64::from(spec.function_id))
        ^ splitmix64(spec.instance.rotate_left(21))
        ^ splitmix64((spec.dimension as u64).rotate_left(42));
    let mut rng = derived_rng(key, 0xB0B);
    let optimum = (0..spec.dimension)
        .map(|_| rng.random_range(-4.0..=4.0))
        .collect();
    let f_opt = rng.random_range(-100.0..=100.0);
    (optimum, f_opt)
}

impl<T: Real> Problem for BbobProblem<T> {
    fn search_space(&self) -> &SearchSpace {
        &self.space
    }

    fn directions(&self) -> &[Direction] {
        &self.directions
    }

    fn evaluate(&self, params: &Params) -> Result<Vec<f64>, ProblemError> {
        let x = read_point::<T>(&self.space, params)?;
        Ok(vec![self.value_at(&x).as_f64()])
    }
}

/// Two spheres centred at `a` and `-a`, `a = (offset, .., offset)`.
/// The Pareto set is the segment between them.
#[derive(Debug, Clone)]
pub struct BiSphereProblem<T: Real> {
    center: Vec<T>,
    space: SearchSpace,
    directions: Vec<Direction>,
}

impl<T: Real> BiSphereProblem<T> {
    pub fn new(dimension: usize, offset: f64) -> Result<Self, BenchmarkError> {
        if dimension == 0 {
            return Err(BenchmarkError::ZeroDimension);
        }
        if !(offset > 0.0 && offset <= 4.0) {
            return Err(BenchmarkError::OffsetOutOfRange(offset));
        }
        Ok(Self {
            center: vec![T::lit(offset); dimension],
            space: box_space(dimension),
            directions: vec![Direction::Minimize, Direction::Minimize],
        })
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn values_at(&self, x: &[T]) -> [T; 2] {
        let (mut f1, mut f2) = (T::zero(), T::zero());
        for (&xi, &ai) in x.iter().zip(&self.center) {
            f1 = f1 + (xi - ai) * (xi - ai);
            f2 = f2 + (xi + ai) * (xi + ai);
        }
        [f1, f2]
    }
}

impl<T: Real> Problem for BiSphereProblem<T> {
    fn search_space(&self) -> &SearchSpace {
        &self.space
    }

    fn directions(&self) -> &[Direction] {
        &self.directions
    }

    fn evaluate(&self, params: &Params) -> Result<Vec<f64>, ProblemError> {
        let x = read_point::<T>(&self.space, params)?;
        Ok(self.values_at(&x).iter().map(|v| v.as_f64()).collect())
    }
}
