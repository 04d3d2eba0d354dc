//! File formats: `TNSR` binary tensors and masks, text configurations and
//! CSV logs.

mod binary;
mod config_file;
mod csv_log;

pub use binary::{
    decode_mask, decode_tensor, encode_mask, encode_tensor, parse_index_list, read_mask,
    read_mask_index_list, read_tensor, write_mask, write_tensor, MAGIC, MASK_VERSION,
    TENSOR_VERSION,
};
pub use config_file::{format_config, parse_config, read_config};
pub use csv_log::{
    append_log, format_real, parse_log, parse_report, parse_sweep_summary, read_log, read_report,
    write_log, write_report, write_report_to, write_sweep_summary, RunLogRow, SweepRow,
    LOG_HEADER, REPORT_HEADER, SUMMARY_HEADER,
};
