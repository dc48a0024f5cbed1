//! `--schedule "F=10001000;sel=00110011"` parsing and printing.

use std::collections::BTreeMap;

use refform_core::{Circuit, Schedule};

use crate::Failure;

/// Resolves a schedule spec against `circuit`. Keys name flip-flops or
/// clocks (latch bits) and control ports (choice digits). Flip-flops on
/// periodic or explicit clocks may be omitted; unnamed controls choose 0.
pub fn parse_schedule(circuit: &Circuit, horizon: usize, spec: &str) -> Result<Schedule, Failure> {
    let mut clock_bits: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    let mut ff_bits: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    let mut choices: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, digits) = item
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("schedule item `{item}` is not NAME=DIGITS")))?;
        let (key, digits) = (key.trim(), digits.trim());
        if digits.chars().count() != horizon {
            return Err(Failure::input(format!(
                "schedule item `{key}` has {} steps, the horizon is {horizon}",
                digits.chars().count()
            )));
        }
        let parsed: Vec<usize> = digits
            .chars()
            .map(|ch| ch.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Failure::input(format!("schedule item `{key}` has a non-digit")))?;
        if let Some(c) = circuit.control_index(key) {
            choices.insert(c, parsed);
            continue;
        }
        if parsed.iter().any(|&d| d > 1) {
            return Err(Failure::input(format!(
                "latch bits for `{key}` must be 0 or 1"
            )));
        }
        let bits: Vec<bool> = parsed.iter().map(|&d| d == 1).collect();
        if let Some(f) = circuit.ff_index(key) {
            ff_bits.insert(f, bits);
        } else if let Some(k) = circuit.clock_index(key) {
            clock_bits.insert(k, bits);
        } else {
            return Err(Failure::input(format!(
                "schedule names `{key}`, which is not a flip-flop, clock or control"
            )));
        }
    }

    let mut latch = Vec::with_capacity(circuit.ffs.len());
    for (i, ff) in circuit.ffs.iter().enumerate() {
        let clock = &circuit.clocks[ff.clock];
        let sibling = || {
            ff_bits
                .iter()
                .find(|(&j, _)| circuit.ffs[j].clock == ff.clock)
                .map(|(_, bits)| bits)
        };
        let row = if let Some(bits) = ff_bits
            .get(&i)
            .or_else(|| clock_bits.get(&ff.clock))
            .or_else(sibling)
        {
            bits.clone()
        } else if clock.kind.is_free() {
            return Err(Failure::input(format!(
                "flip-flop `{}` is on free clock `{}`; give its latch bits in --schedule",
                ff.name, clock.name
            )));
        } else {
            (0..horizon)
                .map(|t| clock.kind.edge_at(t) == Some(true))
                .collect()
        };
        latch.push(row);
    }
    let choice = (0..circuit.control_ports.len())
        .map(|c| choices.remove(&c).unwrap_or_else(|| vec![0; horizon]))
        .collect();
    Ok(Schedule::new(circuit, horizon, latch, choice)?)
}

/// The schedule in `--schedule` syntax, one item per flip-flop and control.
pub fn format_schedule(circuit: &Circuit, schedule: &Schedule) -> String {
    let mut items: Vec<String> = circuit
        .ffs
        .iter()
        .enumerate()
        .map(|(i, ff)| {
            let bits: String = schedule
                .latch_row(i)
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            format!("{}={bits}", ff.name)
        })
        .collect();
    for (c, name) in circuit.control_ports.iter().enumerate() {
        let digits: String = schedule
            .choice_row(c)
            .iter()
            .map(|d| d.to_string())
            .collect();
        items.push(format!("{name}={digits}"));
    }
    items.join(";")
}
