//! Time-unrolled views of a circuit under one schedule.
//!
//! Node `F@t` is flip-flop `F` during step `t`, before its latch/hold. A
//! latching flip-flop receives arrows from its sources at `t`; a holding one
//! from itself. `output@t` reads the chosen sources at `t`.

use std::fmt::Write;

use refform_core::{Circuit, Schedule, Selector, Source, SourceSet};

fn sources(circuit: &Circuit, set: &SourceSet) -> String {
    let names: Vec<&str> = set.iter().map(|&s| circuit.source_name(s)).collect();
    format!("{{{}}}", names.join(", "))
}

fn selector(circuit: &Circuit, sel: &Selector) -> String {
    match sel.control {
        None => sources(circuit, &sel.alternatives[0]),
        Some(c) => {
            let alts: Vec<String> = sel
                .alternatives
                .iter()
                .map(|a| sources(circuit, a))
                .collect();
            format!("select {} [{}]", circuit.control_ports[c], alts.join(", "))
        }
    }
}

pub fn ascii(circuit: &Circuit, schedule: &Schedule) -> String {
    let h = schedule.horizon();
    let cell = (h - 1).to_string().len() + 1;
    let label = circuit
        .ffs
        .iter()
        .map(|f| f.name.len())
        .chain(circuit.control_ports.iter().map(String::len))
        .chain(["step".len()])
        .max()
        .unwrap_or(0)
        + 2;
    let mut out = String::new();
    let mut row = |name: &str, cells: Vec<String>| {
        let mut line = format!("{name:<label$}");
        for c in cells {
            line.push_str(&format!("{c:>cell$}"));
        }
        writeln!(out, "{}", line.trim_end()).unwrap();
    };
    row("step", (0..h).map(|t| t.to_string()).collect());
    for (i, ff) in circuit.ffs.iter().enumerate() {
        row(
            &ff.name,
            schedule
                .latch_row(i)
                .iter()
                .map(|&b| if b { "L" } else { "." }.to_string())
                .collect(),
        );
    }
    for (c, name) in circuit.control_ports.iter().enumerate() {
        row(
            name,
            schedule
                .choice_row(c)
                .iter()
                .map(|d| d.to_string())
                .collect(),
        );
    }
    writeln!(out).unwrap();
    writeln!(out, "L latch, . hold").unwrap();
    for ff in &circuit.ffs {
        writeln!(
            out,
            "{} latches {}",
            ff.name,
            selector(circuit, &ff.data_input)
        )
        .unwrap();
    }
    writeln!(out, "output reads {}", selector(circuit, &circuit.output)).unwrap();
    out
}

fn node(circuit: &Circuit, source: Source, t: usize) -> String {
    format!("\"{}@{t}\"", circuit.source_name(source))
}

pub fn dot(circuit: &Circuit, schedule: &Schedule) -> String {
    let h = schedule.horizon();
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", circuit.name).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for (p, name) in circuit.data_ports.iter().enumerate() {
        for t in 0..h {
            writeln!(
                out,
                "  {} [label=\"{name} t={t}\", shape=ellipse];",
                node(circuit, Source::Data(p), t)
            )
            .unwrap();
        }
    }
    for (i, ff) in circuit.ffs.iter().enumerate() {
        for t in 0..=h {
            let id = node(circuit, Source::Ff(i), t);
            if t == h {
                writeln!(out, "  {id} [label=\"{} t={t}\"];", ff.name).unwrap();
            } else if schedule.latches(i, t) {
                writeln!(
                    out,
                    "  {id} [label=\"{} t={t} latch\", style=bold];",
                    ff.name
                )
                .unwrap();
            } else {
                writeln!(
                    out,
                    "  {id} [label=\"{} t={t} hold\", style=dashed];",
                    ff.name
                )
                .unwrap();
            }
        }
    }
    for t in 0..h {
        writeln!(
            out,
            "  \"output@{t}\" [label=\"output t={t}\", shape=doubleoctagon];"
        )
        .unwrap();
    }
    for t in 0..h {
        let step = schedule.step_control(t);
        for (i, ff) in circuit.ffs.iter().enumerate() {
            let to = node(circuit, Source::Ff(i), t + 1);
            if step.latch[i] {
                for &s in ff.data_input.active(&step.choice) {
                    writeln!(out, "  {} -> {to};", node(circuit, s, t)).unwrap();
                }
            } else {
                writeln!(
                    out,
                    "  {} -> {to} [style=dotted];",
                    node(circuit, Source::Ff(i), t)
                )
                .unwrap();
            }
        }
        for &s in circuit.output.active(&step.choice) {
            writeln!(out, "  {} -> \"output@{t}\";", node(circuit, s, t)).unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}
