use std::collections::BTreeSet;
use std::fmt::Write;

use refform_core::order::{TimePreservationVerdict, WitnessEdge};
use refform_core::{Circuit, InputOccurrence, RefSet, ReferringForm, Schedule};
use serde_json::{json, Value};

use crate::spec::format_schedule;

pub fn occurrence(circuit: &Circuit, o: &InputOccurrence) -> String {
    format!("({},{})", circuit.data_ports[o.port], o.time)
}

pub fn refset(circuit: &Circuit, set: &RefSet) -> String {
    if set.is_empty() {
        return "∅".into();
    }
    let items: Vec<String> = set.iter().map(|o| occurrence(circuit, o)).collect();
    format!("{{{}}}", items.join(", "))
}

fn ports(circuit: &Circuit, set: &BTreeSet<usize>) -> String {
    if set.is_empty() {
        return "∅".into();
    }
    let items: Vec<&str> = set
        .iter()
        .map(|&p| circuit.data_ports[p].as_str())
        .collect();
    format!("{{{}}}", items.join(", "))
}

/// `step | past | current`, one row per step.
pub fn form_table(circuit: &Circuit, form: &ReferringForm) -> String {
    let rows: Vec<(String, String, String)> = (0..form.horizon())
        .map(|t| {
            (
                t.to_string(),
                refset(circuit, form.past(t)),
                ports(circuit, form.current(t)),
            )
        })
        .collect();
    let width = |head: &str, col: &dyn Fn(&(String, String, String)) -> &String| {
        rows.iter()
            .map(|r| col(r).chars().count())
            .chain([head.len()])
            .max()
            .unwrap_or(0)
    };
    let w0 = width("step", &|r| &r.0);
    let w1 = width("past", &|r| &r.1);
    let w2 = width("current", &|r| &r.2);
    let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
    let mut out = String::new();
    let line = |a: &str, b: &str, c: &str| {
        format!("{:>w0$} | {} | {}", a, pad(b, w1), c)
            .trim_end()
            .to_string()
    };
    writeln!(out, "{}", line("step", "past", "current")).unwrap();
    writeln!(
        out,
        "{}-+-{}-+-{}",
        "-".repeat(w0),
        "-".repeat(w1),
        "-".repeat(w2)
    )
    .unwrap();
    for (a, b, c) in &rows {
        writeln!(out, "{}", line(a, b, c)).unwrap();
    }
    out
}

pub fn refset_json(circuit: &Circuit, set: &RefSet) -> Value {
    set.iter()
        .map(|o| json!({ "port": circuit.data_ports[o.port], "time": o.time.0 }))
        .collect()
}

pub fn form_json(circuit: &Circuit, form: &ReferringForm) -> Value {
    let steps: Vec<Value> = (0..form.horizon())
        .map(|t| {
            let current: Vec<&str> = form
                .current(t)
                .iter()
                .map(|&p| circuit.data_ports[p].as_str())
                .collect();
            json!({
                "t": t,
                "past": refset_json(circuit, form.past(t)),
                "current": current,
            })
        })
        .collect();
    json!({ "horizon": form.horizon(), "steps": steps })
}

pub fn scheduled_form_json(circuit: &Circuit, schedule: &Schedule, form: &ReferringForm) -> Value {
    json!({
        "schedule": format_schedule(circuit, schedule),
        "form": form_json(circuit, form),
    })
}

fn witness_json(circuit: &Circuit, witness: &[WitnessEdge]) -> Value {
    witness
        .iter()
        .map(|e| {
            json!({
                "from": refset_json(circuit, &e.from),
                "to": refset_json(circuit, &e.to),
                "form": e.form,
                "t1": e.t1,
                "t2": e.t2,
            })
        })
        .collect()
}

pub fn verdict_json(
    circuit: &Circuit,
    verdict: &TimePreservationVerdict,
    forms: &[(Schedule, ReferringForm)],
) -> Value {
    let forms: Vec<Value> = forms
        .iter()
        .map(|(s, f)| scheduled_form_json(circuit, s, f))
        .collect();
    json!({
        "preserving": verdict.preserving,
        "witness": verdict.witness.as_deref().map(|w| witness_json(circuit, w)),
        "forms": forms,
    })
}

pub fn verdict_text(
    circuit: &Circuit,
    verdict: &TimePreservationVerdict,
    forms: &[(Schedule, ReferringForm)],
    image: usize,
) -> String {
    let mut out = String::new();
    if verdict.preserving {
        let pairs = verdict.order.as_ref().map_or(0, |o| o.relation_size());
        writeln!(out, "time-preserving").unwrap();
        writeln!(
            out,
            "{image} distinct values; the induced order relates {pairs} pairs"
        )
        .unwrap();
        return out;
    }
    writeln!(out, "NOT time-preserving").unwrap();
    let witness = verdict.witness.as_deref().unwrap_or_default();
    writeln!(out, "witness cycle through {} values:", witness.len()).unwrap();
    for e in witness {
        writeln!(
            out,
            "  {} -> {}  (form {}, t={} -> t={})",
            refset(circuit, &e.from),
            refset(circuit, &e.to),
            e.form,
            e.t1,
            e.t2
        )
        .unwrap();
    }
    for (k, (schedule, form)) in forms.iter().enumerate() {
        writeln!(out, "form {k}: {}", format_schedule(circuit, schedule)).unwrap();
        for line in form_table(circuit, form).lines() {
            writeln!(out, "  {line}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use refform_core::dsl::parse;
    use refform_core::influence::restriction_map;
    use refform_core::schedule_from_clocks;

    #[test]
    fn dff_table() {
        let c = parse("circuit d { input I; clock c period 2 offset 0; ff F clock c from {I}; output from {F}; }").unwrap();
        let s = schedule_from_clocks(&c, 4, &Default::default()).unwrap();
        let form = restriction_map(&c, &s).unwrap();
        let expected = "\
step | past    | current
-----+---------+--------
   0 | ∅       | ∅
   1 | {(I,0)} | ∅
   2 | {(I,0)} | ∅
   3 | {(I,2)} | ∅
";
        assert_eq!(form_table(&c, &form), expected);
        let j = form_json(&c, &form);
        assert_eq!(j["steps"][1]["past"][0], json!({"port": "I", "time": 0}));
        assert_eq!(j["horizon"], 4);
    }
}
