//! On-disk formats: checkpoints, CSV reports and PGM images.

mod checkpoint;
mod pgm;
mod report;

pub use checkpoint::{Checkpoint, CKPT_MAGIC, CKPT_VERSION};
pub use pgm::{decode_pgm, encode_pgm, write_pgm};
pub use report::{
    append_report, read_report, summarize, write_rank_corr, write_summary, write_sweep_report, ReportRow, RunKey,
    SummaryRow, TrainLogWriter, RANK_METRICS, REPORT_COLUMNS, STD_SUFFIX, SUMMARY_COLUMNS,
};
