/// The five models of the rejection matrix, in panel order.
pub const BUILTIN_MODELS: [(&str, &str); 5] = [
    ("lv2", include_str!("../../models/lv2.model")),
    ("lv3", include_str!("../../models/lv3.model")),
    ("lorenz", include_str!("../../models/lorenz.model")),
    ("lc2", include_str!("../../models/lc2.model")),
    ("lc3", include_str!("../../models/lc3.model")),
];

const EXAMPLE_MODELS: [(&str, &str); 5] = [
    ("comp3_input", include_str!("../../models/examples/comp3_input.model")),
    ("leak1", include_str!("../../models/examples/leak1.model")),
    ("leak2", include_str!("../../models/examples/leak2.model")),
    ("noleak", include_str!("../../models/examples/noleak.model")),
    ("leak12", include_str!("../../models/examples/leak12.model")),
];

pub const BUILTIN_INVARIANTS: [(&str, &str); 2] = [
    ("comp2", include_str!("../../models/examples/comp2.inv")),
    ("comp3", include_str!("../../models/examples/comp3.inv")),
];

/// Source text of a shipped model.
pub fn builtin_model(name: &str) -> Option<&'static str> {
    BUILTIN_MODELS.iter().chain(EXAMPLE_MODELS.iter()).find(|(n, _)| *n == name).map(|(_, src)| *src)
}

pub fn builtin_invariant(name: &str) -> Option<&'static str> {
    BUILTIN_INVARIANTS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}
