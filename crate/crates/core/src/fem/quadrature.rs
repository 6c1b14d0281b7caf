//! Gauss rules on the unit interval and the reference triangle.

/// Gauss-Legendre nodes and weights on `[0, 1]`; exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        // Map from [-1, 1] to [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on the reference triangle with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(l0, l1, l2)` of each point.
    pub points: Vec<[f64; 3]>,
    /// Weights on the reference triangle; they sum to 1/2.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total
    /// degree `degree`. All weights are positive and all points interior.
    pub fn triangle(degree: usize) -> QuadratureRule {
        let n = (degree + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let xi = x[i];
                let eta = x[j] * (1.0 - x[i]);
                points.push([1.0 - xi - eta, xi, eta]);
                weights.push(w[i] * w[j] * (1.0 - x[i]));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss rule on `[0, 1]` exact for the given degree.
pub fn segment_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre((degree + 2) / 2)
}
