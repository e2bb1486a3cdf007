//! One runner per experiment kind. Each writes its CSVs and SVGs into an
//! already prepared run directory.

pub mod deficit;
pub mod gradsim;
pub mod lindyn;
pub mod rsv_sim;
pub mod sweep;

use std::path::Path;

use crate::csv::Table;
use crate::error::Result;
use crate::manifest::write_file;

pub(crate) fn save_csv(dir: &Path, name: &str, table: &Table) -> Result<()> {
    write_file(&dir.join(name), table.render())
}

pub(crate) fn save_svg(dir: &Path, name: &str, svg: String) -> Result<()> {
    write_file(&dir.join(name), svg)
}
