//! Named behaviors selectable with `--preset`.

use clap::ValueEnum;
use svetshare::behavior::{
    classical_box, mermin_box, mermin_wiring_box, svetlichny_box, tunable_unsafe_box, unsafe_ns_box, Behavior, Scenario,
};
use svetshare::num::Value;
use svetshare::quantum::{behavior_from_quantum, mermin_setup, svetlichny_optimal_behavior};

use crate::{compute, usage, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    MerminBox,
    SvetlichnyBox,
    ClassicalBox,
    Uniform,
    /// Observed marginal of the unsafe non-signaling box.
    UnsafeNs,
    /// Observed marginal of the `S = 4 + 2u` family; `--param u`.
    TunableUnsafe,
    /// Noisy GHZ with optimal settings; `--param v` (default 1).
    GhzOptimal,
    /// GHZ with Pauli X/Y measurements.
    GhzMermin,
    /// `v p_Svet + (1 - v) p_Clas`; `--param v`.
    MixV,
    /// Observed marginal of the untrusted-Alice wiring.
    MerminWiring,
}

impl Preset {
    fn takes_param(self) -> bool {
        matches!(self, Preset::TunableUnsafe | Preset::GhzOptimal | Preset::MixV)
    }

    pub fn build(self, param: Option<&str>) -> Result<Behavior, Failure> {
        if param.is_some() && !self.takes_param() {
            return Err(usage(format!("preset {self:?} takes no --param")));
        }
        let value = |default: Option<&str>| -> Result<Value, Failure> {
            let raw = param.or(default).ok_or_else(|| usage("this preset needs --param"))?;
            Value::parse(raw).ok_or_else(|| usage(format!("cannot parse parameter '{raw}'")))
        };
        Ok(match self {
            Preset::MerminBox => mermin_box(),
            Preset::SvetlichnyBox => svetlichny_box(),
            Preset::ClassicalBox => classical_box(),
            Preset::Uniform => Behavior::uniform(Scenario::binary(3)),
            Preset::UnsafeNs => unsafe_ns_box().observed(),
            Preset::TunableUnsafe => tunable_unsafe_box(&value(None)?).map_err(usage)?.observed(),
            Preset::GhzOptimal => svetlichny_optimal_behavior(value(Some("1"))?.to_f64()).map_err(usage)?,
            Preset::GhzMermin => {
                let (state, m) = mermin_setup().map_err(compute)?;
                behavior_from_quantum(&state, &m).map_err(compute)?
            }
            Preset::MixV => Behavior::mix(&svetlichny_box(), &classical_box(), &value(None)?).map_err(usage)?,
            Preset::MerminWiring => mermin_wiring_box().observed(),
        })
    }
}
