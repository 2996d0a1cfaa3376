use super::{Table, TableFormat};

pub fn truncation_marker(omitted: usize) -> String {
    format!("... ({omitted} rows omitted)")
}

/// Renders `t` as `|`-joined lines: the header, then at most `max_rows` data
/// rows. Missing cells render as empty fields. If rows were dropped, a final
/// truncation marker line says how many. `max_rows` below 1 is treated as 1.
pub fn serialize_for_prompt(t: &Table, max_rows: usize) -> String {
    let max_rows = max_rows.max(1);
    let mut lines = Vec::with_capacity(t.row_count().min(max_rows) + 2);
    lines.push(t.column_names().collect::<Vec<_>>().join("|"));
    let shown = t.row_count().min(max_rows);
    for row in 0..shown {
        let fields: Vec<String> = t.columns().iter().map(|c| c.cells[row].render()).collect();
        lines.push(fields.join("|"));
    }
    if t.row_count() > shown {
        lines.push(truncation_marker(t.row_count() - shown));
    }
    lines.join("\n")
}

/// Writes the whole table as a file in `format`. CSV and TSV quote where
/// needed; the pipe form has no quoting, so cells containing `|` or line
/// breaks do not survive a re-read.
pub fn write_table(t: &Table, format: TableFormat) -> String {
    let delimiter = match format {
        TableFormat::Csv => b',',
        TableFormat::Tsv => b'\t',
        TableFormat::Pipe => {
            let mut s = serialize_for_prompt(t, usize::MAX);
            s.push('\n');
            return s;
        }
    };
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    w.write_record(t.column_names()).expect("in-memory write");
    for row in 0..t.row_count() {
        w.write_record(t.columns().iter().map(|c| c.cells[row].render()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("input was UTF-8")
}
