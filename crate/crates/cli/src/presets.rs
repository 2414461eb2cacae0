//! Built-in scenarios. Every preset exists with a 15 nm and a 30 nm sphere
//! (`-r15`, `-r30`); the bare name is the 15 nm variant.

use serde_json::{json, Value};

use crate::config::{parse_value, Scenario};
use crate::error::{CliError, CliResult};

pub const RADII: [(&str, f64); 2] = [("r15", 15.0), ("r30", 30.0)];

/// (name, description, scenario tree without sphere and name).
fn base_presets() -> Vec<(&'static str, &'static str, Value)> {
    let ring = |orientation: &str, h: f64| {
        json!({"layout": "ring", "count": 6, "h_nm": h, "orientation": orientation, "omega0_eV": 2.77})
    };
    let poles = |h: f64| json!({"layout": "poles", "count": 6, "h_nm": h, "omega0_eV": 2.77, "offset_deg": 1.0});
    let pair = |orientation: &str, h: f64, omega0: f64| {
        json!({"layout": "pair", "h_nm": h, "orientation": orientation, "omega0_eV": omega0, "theta_deg": 180.0})
    };
    vec![
        ("fig2a", "6 azimuthal emitters on a ring, h = 20 nm: burst, ideal and incoherent curves", json!({
            "tasks": ["rates", "evolve", "ladder"], "emitters": ring("azimuthal", 20.0)})),
        ("fig2a-poles", "6 radial emitters at the poles, h = 20 nm", json!({
            "tasks": ["rates", "evolve"], "emitters": poles(20.0)})),
        ("fig2b", "6 radial emitters on a ring, h = 20 nm", json!({
            "tasks": ["rates", "evolve"], "emitters": ring("radial", 20.0)})),
        ("fig2b-poles", "6 radial emitters at the poles, h = 20 nm", json!({
            "tasks": ["rates", "evolve"], "emitters": poles(20.0)})),
        ("fig2c", "6 radial emitters on a ring, h = 2 nm (nearly incoherent)", json!({
            "tasks": ["rates", "evolve"], "emitters": ring("radial", 2.0)})),
        ("fig2c-poles", "6 radial emitters at the poles, h = 2 nm", json!({
            "tasks": ["rates", "evolve"], "emitters": poles(2.0)})),
        ("fig3", "extended Dicke ladder of the 6 azimuthal ring, h = 20 nm", json!({
            "tasks": ["rates", "ladder"], "emitters": ring("azimuthal", 20.0)})),
        ("fig4a", "Γ12/Γ1 of a radial pair versus angular separation for h = 2 nm (2.964 eV) and 20 nm (2.771 eV)", json!({
            "tasks": ["sweep"], "emitters": pair("radial", 20.0, 2.771),
            "sweep": {"param": "emitters.theta_deg", "from": 0.0, "to": 180.0, "steps": 37,
                      "series": {"params": ["emitters.h_nm", "emitters.omega0_eV"], "values": [[2.0, 2.964], [20.0, 2.771]]}}})),
        ("fig4b", "radial pair at the poles, h = 20 nm, ω0 = 2.771 eV", json!({
            "tasks": ["rates", "evolve"], "emitters": pair("radial", 20.0, 2.771), "evolve": {"t_max": 4.0, "samples": 401}})),
        ("fig4c", "radial pair at the poles, h = 2 nm, ω0 = 2.964 eV (blockade)", json!({
            "tasks": ["rates", "evolve"], "emitters": pair("radial", 2.0, 2.964), "evolve": {"t_max": 4.0, "samples": 401}})),
        ("table1", "bright states of the 6 azimuthal ring, h = 20 nm", json!({
            "tasks": ["rates", "eigenstates"], "emitters": ring("azimuthal", 20.0)})),
        ("table1-radial", "bright states of the 6 radial ring, h = 20 nm", json!({
            "tasks": ["rates", "eigenstates"], "emitters": ring("radial", 20.0)})),
        ("table2", "brightest states of the azimuthal ring for all modes and LSP1..3 alone", json!({
            "tasks": ["eigenstates"], "emitters": ring("azimuthal", 20.0), "eigenstates": {"selections": [0, 1, 2, 3]}})),
        ("table3", "radial pair at the poles, h = 2 nm, ω0 = 2.964 eV, single-mode bright states", json!({
            "tasks": ["modes", "rates", "eigenstates"], "emitters": pair("radial", 2.0, 2.964),
            "eigenstates": {"selections": [0, 1, 2, 3]}})),
        ("table4", "super/sub-radiant radial pair at the poles, h = 20 nm, ω0 = 2.771 eV", json!({
            "tasks": ["rates", "eigenstates"], "emitters": pair("radial", 20.0, 2.771)})),
        ("table4-azimuthal", "super/sub-radiant azimuthal pair at the poles, h = 20 nm, ω0 = 2.771 eV", json!({
            "tasks": ["rates", "eigenstates"], "emitters": pair("azimuthal", 20.0, 2.771)})),
    ]
}

#[derive(Debug, Clone)]
pub struct PresetInfo {
    pub name: String,
    pub description: String,
}

/// Every preset name with its description.
pub fn list() -> Vec<PresetInfo> {
    let mut out = Vec::new();
    for (name, description, _) in base_presets() {
        for (suffix, r) in RADII {
            out.push(PresetInfo { name: format!("{name}-{suffix}"), description: format!("{description}; R = {r} nm") });
        }
    }
    out
}

/// Scenario tree of a preset, or `None` for an unknown name.
pub fn preset_value(name: &str) -> Option<Value> {
    let (base, radius) = RADII
        .iter()
        .find_map(|(suffix, r)| name.strip_suffix(&format!("-{suffix}")).map(|b| (b, *r)))
        .unwrap_or((name, 15.0));
    let (_, _, mut v) = base_presets().into_iter().find(|(n, _, _)| *n == base)?;
    let obj = v.as_object_mut()?;
    obj.insert("name".into(), json!(name));
    obj.insert("sphere".into(), json!({"radius_nm": radius}));
    Some(v)
}

pub fn preset(name: &str) -> CliResult<Scenario> {
    let v = preset_value(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
    parse_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Task;

    #[test]
    fn every_preset_parses() {
        for p in list() {
            preset(&p.name).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn coverage() {
        let names: Vec<String> = list().into_iter().map(|p| p.name).collect();
        for base in ["fig2a", "fig2b", "fig2c", "fig3", "fig4a", "fig4b", "fig4c", "table1", "table2", "table3", "table4"] {
            for suffix in ["r15", "r30"] {
                assert!(names.contains(&format!("{base}-{suffix}")), "{base}-{suffix}");
            }
        }
    }

    #[test]
    fn fig2a_contents() {
        let s = preset("fig2a").unwrap();
        assert_eq!(s.config.n_emitters(), 6);
        assert_eq!(s.config.omega0(), 2.77);
        assert_eq!(s.config.sphere.radius, 15.0);
        assert_eq!(s.tasks, vec![Task::Rates, Task::Evolve, Task::Ladder]);
        assert_eq!(preset("fig2a-r30").unwrap().config.sphere.radius, 30.0);
    }

    #[test]
    fn unknown_preset() {
        assert!(preset("fig9").is_err());
    }
}
