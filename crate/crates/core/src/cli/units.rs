//! Numbers with optional SI-prefixed unit suffixes, e.g. `2mm`, `1e-9 m2`,
//! `10mW`, `4.11e-21 W/Hz`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Area,
    /// Peak or background intensity. Power-style suffixes (`mW`) are accepted
    /// and scale the number only.
    Intensity,
    Psd,
    Permittivity,
    Resistance,
    Velocity,
    Dimensionless,
}

fn prefix_scale(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "c" => 1e-2,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        _ => return None,
    })
}

// (base unit, exponent applied to the prefix scale)
fn bases(dim: Dimension) -> &'static [(&'static str, i32)] {
    match dim {
        Dimension::Length => &[("m", 1)],
        Dimension::Area => &[("m2", 2), ("m^2", 2), ("m²", 2)],
        Dimension::Intensity => &[("W", 1), ("W/m2", 1), ("W/m^2", 1)],
        Dimension::Psd => &[("W/Hz", 1)],
        Dimension::Permittivity => &[("F/m", 1)],
        Dimension::Resistance => &[("ohm", 1), ("Ohm", 1), ("Ω", 1)],
        Dimension::Velocity => &[("m/s", 1)],
        Dimension::Dimensionless => &[],
    }
}

fn unit_scale(unit: &str, dim: Dimension) -> Option<f64> {
    if unit.is_empty() {
        return Some(1.0);
    }
    for &(base, exp) in bases(dim) {
        if unit == base {
            return Some(1.0);
        }
        if let Some(prefix) = unit.strip_suffix(base) {
            if let Some(s) = prefix_scale(prefix) {
                return Some(s.powi(exp));
            }
        }
    }
    None
}

/// Parses `text` as a number in SI base units for `dim`.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let t = text.trim();
    let split = numeric_prefix_len(t);
    if split == 0 {
        return Err(format!("expected a number, found `{t}`"));
    }
    let value: f64 = t[..split]
        .parse()
        .map_err(|_| format!("invalid number `{}`", &t[..split]))?;
    let unit = t[split..].trim();
    let scale =
        unit_scale(unit, dim).ok_or_else(|| format!("unit `{unit}` is not valid for {dim:?}"))?;
    Ok(value * scale)
}

// longest prefix that parses as a float
fn numeric_prefix_len(t: &str) -> usize {
    let mut best = 0;
    for (i, _) in t
        .char_indices()
        .skip(1)
        .chain(std::iter::once((t.len(), ' ')))
    {
        if t[..i].parse::<f64>().is_ok() {
            best = i;
        }
    }
    best
}
