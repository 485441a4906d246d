//! Scenarios shipped with the binary.

pub struct Builtin {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! builtin {
    ($name:literal) => {
        Builtin {
            name: $name,
            text: include_str!(concat!("../scenarios/", $name, ".toml")),
        }
    };
}

pub const BUILTINS: &[Builtin] = &[
    builtin!("paper-example-3"),
    builtin!("paper-example-5"),
    builtin!("p-power-cross-check"),
    builtin!("holder-suite"),
    builtin!("modulus-properties"),
    builtin!("fuglede-demo"),
    builtin!("weakA0-survey"),
    builtin!("convergence-study"),
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

impl Builtin {
    pub fn description(&self) -> String {
        toml::from_str::<toml::Table>(self.text)
            .ok()
            .and_then(|t| {
                t.get("description")
                    .and_then(|d| d.as_str())
                    .map(str::to_string)
            })
            .unwrap_or_default()
    }
}
