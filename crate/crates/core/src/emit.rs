//! Canonical JSON and trace emission.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// JSON with object keys in sorted order, so equal states always print
/// identically.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json::Value keeps objects in a BTreeMap
    let tree = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&tree)?)
}

/// Writes one row per trace step: `step,value_json,feedback_json`.
///
/// Row `i` carries the value at step `i` and the feedback that was applied to
/// it; the final row has an empty feedback column.
pub fn write_trace_csv<W, V, F>(out: W, values: &[V], feedbacks: &[F]) -> Result<()>
where
    W: Write,
    V: Serialize,
    F: Serialize,
{
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["step", "value_json", "feedback_json"])?;
    for (step, value) in values.iter().enumerate() {
        let feedback = match feedbacks.get(step) {
            Some(fb) => canonical_json(fb)?,
            None => String::new(),
        };
        writer.write_record([step.to_string(), canonical_json(value)?, feedback])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a, V, F> {
    step: usize,
    value: &'a V,
    feedback: Option<&'a F>,
}

/// JSON-lines form of [`write_trace_csv`].
pub fn write_trace_jsonl<W, V, F>(mut out: W, values: &[V], feedbacks: &[F]) -> Result<()>
where
    W: Write,
    V: Serialize,
    F: Serialize,
{
    for (step, value) in values.iter().enumerate() {
        let line = TraceLine {
            step,
            value,
            feedback: feedbacks.get(step),
        };
        writeln!(out, "{}", canonical_json(&line)?)?;
    }
    Ok(())
}
