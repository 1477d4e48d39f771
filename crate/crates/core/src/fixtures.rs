//! Published benchmark data: the banded Grcar variant, the 7-state plant with
//! its four printed third-order controllers, and the two-state nonlinear
//! example with its printed second-order controller.

use crate::matcore::RealMatrix;
use crate::sysmodel::{Controller, StateSpace};

/// Banded Toeplitz matrix with `-1` on the subdiagonal and diagonal and `+1`
/// on the first three superdiagonals.
pub fn grcar(n: usize) -> RealMatrix {
    RealMatrix::from_fn(n, n, |i, j| {
        let k = j as isize - i as isize;
        match k {
            -1 | 0 => -1.0,
            1..=3 => 1.0,
            _ => 0.0,
        }
    })
}

/// Reported Kreiss constants of `grcar(n)`.
pub const GRCAR_KREISS: [(usize, f64); 6] = [
    (10, 1.1855),
    (20, 2.7199),
    (30, 8.7803),
    (40, 33.155),
    (50, 135.48),
    (100, 2.4837e5),
];

/// Reported peak of `α_ε/ε` for `grcar(50)`.
pub const GRCAR50_EPS_PEAK: f64 = 133.6;

pub const PLANT_A: [[f64; 7]; 7] = [
    [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -625.0],
    [0.0, -1.0, -30.0, 400.0, 0.0, 0.0, 250.0],
    [-2.0, 0.0, -1.0, 0.0, 0.0, 0.0, 30.0],
    [5.0, -1.0, 5.0, -1.0, 0.0, 0.0, 200.0],
    [11.0, 1.0, 25.0, -10.0, -1.0, 1.0, -200.0],
    [200.0, 0.0, 0.0, -150.0, -100.0, -1.0, -1000.0],
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
];

/// Reported open-loop numerical abscissa and transient peak of the 7-state plant.
pub const PLANT_OPEN_LOOP_OMEGA: f64 = 680.4;
pub const PLANT_OPEN_LOOP_PEAK: f64 = 680.4;

/// Controllers in packed `[A_K B_K; C_K D_K]` layout, three states, one
/// measurement, four inputs.
pub const CONTROLLER_KREISS: [[f64; 4]; 7] = [
    [-42.9038, 11.5813, 0.0000, 0.0128],
    [-164.9255, 70.3235, 152.7735, -13.6539],
    [0.0000, -25.9407, -149.4428, 11.8197],
    [-167.0674, 318.3261, 809.8411, -66.1531],
    [200.4722, 413.5407, -666.0200, 72.5131],
    [-66.2768, 27.6020, 76.9643, -2.4021],
    [385.9815, -189.8190, -229.6792, 22.6246],
];

pub const CONTROLLER_NUMABS: [[f64; 4]; 7] = [
    [59.9714, 140.8838, 0.0000, 125.1870],
    [100.3809, 151.4666, -0.9285, 152.6506],
    [0.0000, -271.6638, -612.4505, 514.0162],
    [-180.2674, 2.4115, 610.7701, -818.7354],
    [-1.9939, 17.2208, 896.7905, 248.2384],
    [134.2585, 322.4479, 198.7380, 27.7581],
    [145.1514, 114.7305, -229.1801, 350.4296],
];

pub const CONTROLLER_H2MATCH: [[f64; 4]; 7] = [
    [-10.0166, 32.8652, 0.0000, 4.2887],
    [-5.3332, -75.2766, 74.7646, 83.9716],
    [0.0000, 246.4755, -258.5282, -246.5133],
    [-205.9510, 236.5090, -123.3962, -152.2283],
    [-1153.0456, -879.8479, -71.1224, 150.9151],
    [-13.2672, -120.1666, 21.8126, 115.6246],
    [21.5530, 3.7044, 60.9500, 127.7649],
];

pub const CONTROLLER_WCENERGY: [[f64; 4]; 7] = [
    [-11.5489, 78.9907, 0.0000, 53.2452],
    [199.9054, -357.8574, 329.8169, -206.2099],
    [0.0000, -60.0656, -22.2754, -40.3642],
    [-136.5439, -7.6336, 193.7006, 30.1711],
    [-1434.8960, 269.1622, -473.4523, 27.1643],
    [-482.9145, 868.9921, -824.9746, 499.5364],
    [-39.9217, 559.8141, -80.1572, 351.7574],
];

/// The four printed designs for the 7-state plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    Kreiss,
    NumAbs,
    H2Match,
    WcEnergy,
}

impl Design {
    pub const ALL: [Design; 4] = [
        Design::Kreiss,
        Design::NumAbs,
        Design::H2Match,
        Design::WcEnergy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Design::Kreiss => "kreiss",
            Design::NumAbs => "numabs",
            Design::H2Match => "h2match",
            Design::WcEnergy => "wcenergy",
        }
    }

    /// Reported closed-loop `(𝓜₀, 𝒦, Ω)`.
    pub fn reported(self) -> (f64, f64, f64) {
        match self {
            Design::Kreiss => (42.8, 10.91, 656.0),
            Design::NumAbs => (1208.0, 349.6, 502.0),
            Design::H2Match => (44.37, 23.5, 621.0),
            Design::WcEnergy => (57.1, 24.8, 686.0),
        }
    }

    fn packed(self) -> &'static [[f64; 4]; 7] {
        match self {
            Design::Kreiss => &CONTROLLER_KREISS,
            Design::NumAbs => &CONTROLLER_NUMABS,
            Design::H2Match => &CONTROLLER_H2MATCH,
            Design::WcEnergy => &CONTROLLER_WCENERGY,
        }
    }
}

fn from_rows<const R: usize, const C: usize>(rows: &[[f64; C]; R]) -> RealMatrix {
    RealMatrix::from_fn(R, C, |i, j| rows[i][j])
}

pub fn example_plant_a() -> RealMatrix {
    from_rows(&PLANT_A)
}

/// The 7-state plant with `B = [I_4; 0]`, `C = e_6ᵀ`, `D = 0`.
pub fn example_plant() -> StateSpace {
    let mut b = RealMatrix::zeros(7, 4);
    for i in 0..4 {
        b[(i, i)] = 1.0;
    }
    let mut c = RealMatrix::zeros(1, 7);
    c[(0, 5)] = 1.0;
    StateSpace::new(example_plant_a(), b, c, RealMatrix::zeros(1, 4)).expect("fixture is consistent")
}

pub fn printed_controller(design: Design) -> Controller {
    Controller::from_packed(from_rows(design.packed()), 3).expect("fixture is consistent")
}

pub const NL_REYNOLDS: f64 = 25.0;
pub const NL_KREISS: f64 = 4.36;
pub const NL_THRESHOLD: f64 = 4.22e-4;
/// Initial values of `x₂(0)` with `x₁(0) = 0`.
pub const NL_INITIAL_X2: [f64; 8] = [1e-7, 1e-6, 1e-5, 1e-4, 4e-4, 5e-4, 1e-3, 1e-2];

pub const NL_CONTROLLER: [[f64; 3]; 3] = [
    [-3.4146, -0.1902, -1.7997],
    [-0.2856, -2.6781, -0.1119],
    [-1.8068, -0.1095, -1.3710],
];

pub const NL_CLOSED_LOOP: [[f64; 4]; 4] = [
    [-1.4110, 1.0000, -1.8068, -0.1095],
    [-1.3710, -0.0800, -1.8068, -0.1095],
    [-1.7997, 0.0000, -3.4146, -0.1902],
    [-0.1119, 0.0000, -0.2856, -2.6781],
];

pub fn nonlinear_a(r: f64) -> RealMatrix {
    nalgebra::dmatrix![-1.0 / r, 1.0; 0.0, -2.0 / r]
}

pub fn nonlinear_bx() -> RealMatrix {
    nalgebra::dmatrix![0.0, -1.0; 1.0, 0.0]
}

/// Linear part `(A, B, C, 0)` of the nonlinear example.
pub fn nonlinear_linear_part(r: f64) -> StateSpace {
    StateSpace::new(
        nonlinear_a(r),
        nalgebra::dmatrix![1.0; 1.0],
        nalgebra::dmatrix![1.0, 0.0],
        RealMatrix::zeros(1, 1),
    )
    .expect("fixture is consistent")
}

pub fn nonlinear_controller() -> Controller {
    Controller::from_packed(from_rows(&NL_CONTROLLER), 2).expect("fixture is consistent")
}

pub fn nonlinear_printed_closed_loop() -> RealMatrix {
    from_rows(&NL_CLOSED_LOOP)
}

/// Named matrices in a fixed order, for listing and checksumming.
pub fn catalog() -> Vec<(&'static str, RealMatrix)> {
    let mut out = vec![("plant-A", example_plant_a())];
    let plant = example_plant();
    out.push(("plant-B", plant.b().clone()));
    out.push(("plant-C", plant.c().clone()));
    for d in Design::ALL {
        let name = match d {
            Design::Kreiss => "controller-kreiss",
            Design::NumAbs => "controller-numabs",
            Design::H2Match => "controller-h2match",
            Design::WcEnergy => "controller-wcenergy",
        };
        out.push((name, printed_controller(d).packed().clone()));
    }
    out.push(("nl-A", nonlinear_a(NL_REYNOLDS)));
    out.push(("nl-Bx", nonlinear_bx()));
    let nl = nonlinear_linear_part(NL_REYNOLDS);
    out.push(("nl-B", nl.b().clone()));
    out.push(("nl-C", nl.c().clone()));
    out.push(("nl-controller", nonlinear_controller().packed().clone()));
    out.push(("nl-closed-loop", nonlinear_printed_closed_loop()));
    out
}

/// Canonical text of the catalog: one line per row, four decimals per entry.
pub fn canonical_text() -> String {
    let mut s = String::new();
    for (name, m) in catalog() {
        s.push_str(&format!("{name} {} {}\n", m.nrows(), m.ncols()));
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.4}", m[(i, j)])).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    }
    s
}
