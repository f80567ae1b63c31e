use serde::Serialize;

use crate::error::{Error, Result};

/// Quadrature rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Symmetry orbits in barycentric coordinates; weights are relative to the triangle area.
enum Orbit {
    Centroid(f64),
    /// (a, a, 1-2a) and its permutations.
    Edge(f64, f64),
    /// (a, b, 1-a-b) and its permutations.
    General(f64, f64, f64),
}

const DEG2: &[Orbit] = &[Orbit::Edge(0.16666666666666666, 0.3333333333333333)];
const DEG4: &[Orbit] = &[
    Orbit::Edge(0.44594849091596483, 0.22338158967801136),
    Orbit::Edge(0.09157621350977076, 0.10995174365532195),
];
const DEG6: &[Orbit] = &[
    Orbit::Edge(0.24928674517091226, 0.11678627572637744),
    Orbit::Edge(0.06308901449150205, 0.05084490637020631),
    Orbit::General(0.05314504984481764, 0.3103524510337826, 0.08285107561837479),
];
const DEG8: &[Orbit] = &[
    Orbit::Centroid(0.144315607677787),
    Orbit::Edge(0.459292588292723, 0.095091634267285),
    Orbit::Edge(0.17056930775176, 0.103217370534718),
    Orbit::Edge(0.050547228317031, 0.032458497623198),
    Orbit::General(0.008394777409958, 0.263112829634638, 0.027230314174435),
];
const DEG10: &[Orbit] = &[
    Orbit::Centroid(0.09081799038600352),
    Orbit::Edge(0.4855776333843549, 0.03672595775553633),
    Orbit::Edge(0.10948157548420066, 0.0453210594351825),
    Orbit::General(0.14170721941235115, 0.30793983876416164, 0.07275791684643981),
    Orbit::General(0.025003534761830405, 0.24667256063797646, 0.028327242530340586),
    Orbit::General(0.009540815400351586, 0.06680325101126128, 0.009421666963526266),
];
const DEG12: &[Orbit] = &[
    Orbit::Edge(0.4882173897790684, 0.025731066442980215),
    Orbit::Edge(0.4397243922957708, 0.04369254447941102),
    Orbit::Edge(0.2712103850344809, 0.06285822418887839),
    Orbit::Edge(0.12757614562211894, 0.034796113000009586),
    Orbit::Edge(0.02131735043498777, 0.006166261042745355),
    Orbit::General(0.11534349458953386, 0.275713269859575, 0.04037155775095183),
    Orbit::General(0.022838332251662527, 0.281325580915116, 0.02235677322857981),
    Orbit::General(0.025734050554652943, 0.11625191585442915, 0.017316231110122753),
];

pub const SUPPORTED_DEGREES: [usize; 6] = [2, 4, 6, 8, 10, 12];

pub fn triangle_quadrature(exactness: usize) -> Result<QuadratureRule> {
    let orbits = match exactness {
        2 => DEG2,
        4 => DEG4,
        6 => DEG6,
        8 => DEG8,
        10 => DEG10,
        12 => DEG12,
        _ => return Err(Error::UnsupportedQuadrature(exactness)),
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |l: [f64; 3], w: f64| {
        points.push([l[1], l[2]]);
        weights.push(0.5 * w);
    };
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => push([1.0 / 3.0; 3], w),
            Orbit::Edge(a, w) => {
                let b = 1.0 - 2.0 * a;
                for l in [[a, a, b], [a, b, a], [b, a, a]] {
                    push(l, w);
                }
            }
            Orbit::General(a, b, w) => {
                let c = 1.0 - a - b;
                for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    push(l, w);
                }
            }
        }
    }
    Ok(QuadratureRule { points, weights, degree: exactness })
}

/// Gauss-Legendre rule on [0, 1] with weights summing to 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
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
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
