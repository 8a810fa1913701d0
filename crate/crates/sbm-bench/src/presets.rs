//! Built-in model presets: four 2-block mixture models carrying fixed latent
//! positions, the balanced-affinity and core-periphery blockmodels, and the
//! 4-block brain-connectome blockmodel.

use ndarray::{array, Array1, Array2};

/// What a preset provides.
#[derive(Debug, Clone)]
pub enum PresetKind {
    /// Latent positions given directly (mixture-family models).
    Mixture { x: Array2<f64>, pi: Array1<f64> },
    /// Block matrix given directly (graph-family models).
    Sbm {
        b: Array2<f64>,
        pi: Array1<f64>,
        /// Whether replications fix labels to exact block proportions.
        fixed_labels: bool,
        /// Reference latent positions, when a published rounding exists.
        x_ref: Option<Array2<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub kind: PresetKind,
}

fn half() -> Array1<f64> {
    array![0.5, 0.5]
}

fn affinity(a: f64, b: f64) -> Array2<f64> {
    array![[a, b], [b, a]]
}

fn core_periphery(a: f64, b: f64) -> Array2<f64> {
    array![[a, b], [b, b]]
}

/// The full preset registry.
pub fn builtin_presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "m1",
            kind: PresetKind::Mixture {
                x: array![[0.6210, 0.3382], [0.3382, 0.6210]],
                pi: half(),
            },
        },
        Preset {
            name: "m2",
            kind: PresetKind::Mixture {
                x: array![[0.4076, 0.1840], [0.1840, 0.4076]],
                pi: half(),
            },
        },
        Preset {
            name: "m3",
            kind: PresetKind::Mixture {
                x: array![[0.6024, 0.3703], [0.3703, 0.5319]],
                pi: half(),
            },
        },
        Preset {
            name: "m4",
            kind: PresetKind::Mixture {
                x: array![[0.3962, 0.2074], [0.2074, 0.3721]],
                pi: half(),
            },
        },
        Preset {
            name: "affinity1",
            kind: PresetKind::Sbm {
                b: affinity(0.5, 0.4),
                pi: half(),
                fixed_labels: true,
                x_ref: None,
            },
        },
        Preset {
            name: "affinity2",
            kind: PresetKind::Sbm {
                b: affinity(0.2, 0.15),
                pi: half(),
                fixed_labels: true,
                x_ref: None,
            },
        },
        Preset {
            name: "coreperiph3",
            kind: PresetKind::Sbm {
                b: core_periphery(0.2, 0.15),
                pi: half(),
                fixed_labels: true,
                x_ref: None,
            },
        },
        Preset {
            name: "coreperiph4",
            kind: PresetKind::Sbm {
                b: core_periphery(0.5, 0.42),
                pi: half(),
                fixed_labels: true,
                x_ref: None,
            },
        },
        Preset {
            name: "connectome",
            kind: PresetKind::Sbm {
                b: array![
                    [0.020, 0.044, 0.002, 0.009],
                    [0.044, 0.115, 0.010, 0.042],
                    [0.002, 0.010, 0.020, 0.045],
                    [0.009, 0.042, 0.045, 0.117]
                ],
                pi: array![0.28, 0.22, 0.28, 0.22],
                fixed_labels: false,
                x_ref: Some(array![
                    [0.0915, 0.1076, 0.0057, 0.0034],
                    [0.1076, 0.3149, 0.0056, 0.0649],
                    [0.0057, 0.0056, 0.0886, 0.1099],
                    [0.0034, 0.0649, 0.1099, 0.3173]
                ]),
            },
        },
    ]
}

/// Looks up a preset by name.
pub fn find_preset(name: &str) -> Option<Preset> {
    builtin_presets().into_iter().find(|p| p.name == name)
}
