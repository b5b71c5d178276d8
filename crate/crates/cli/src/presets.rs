//! Built-in configs, shipped as JSON so they double as schema examples.

pub const ALL: &[(&str, &str)] = &[
    ("ball-oracle", include_str!("../presets/ball-oracle.json")),
    ("boolean-ergodic", include_str!("../presets/boolean-ergodic.json")),
    ("boolean-geometry", include_str!("../presets/boolean-geometry.json")),
    ("boolean-solve", include_str!("../presets/boolean-solve.json")),
    ("boolean-sweep", include_str!("../presets/boolean-sweep.json")),
    ("periodic-ergodic", include_str!("../presets/periodic-ergodic.json")),
    ("rcm-density", include_str!("../presets/rcm-density.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
