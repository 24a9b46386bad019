use super::DegradationTrace;
use crate::metrics::StabilityIndex;
use crate::Result;

pub const TRACE_CSV_HEADER: [&str; 8] = [
    "algorithm",
    "step",
    "size",
    "refinement",
    "mean_auc",
    "auc_sd",
    "index",
    "value",
];

/// One row per step per stability index.
pub fn trace_csv(trace: &DegradationTrace) -> Result<String> {
    traces_csv(std::slice::from_ref(trace))
}

pub fn traces_csv(traces: &[DegradationTrace]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_CSV_HEADER)?;
    for t in traces {
        for (i, s) in t.steps.iter().enumerate() {
            for index in StabilityIndex::ALL {
                w.write_record([
                    t.algorithm.name().to_string(),
                    i.to_string(),
                    s.size.to_string(),
                    s.refinement.to_string(),
                    s.result.mean_auc.to_string(),
                    s.result.auc_sd.to_string(),
                    index.name().to_string(),
                    s.indexes.get(index).to_string(),
                ])?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::invalid(e.error().to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
