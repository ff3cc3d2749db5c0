//! gnuplot scripts for the CSV artifacts. Nothing is rendered here.

use std::path::Path;

use crate::error::{Error, Result};

/// Script for a CSV whose first line is `header`; `file` is the CSV name the
/// script refers to.
pub fn gnuplot_script(header: &str, file: &str) -> Result<String> {
    let body = match header.trim() {
        "freq_mhz,intensity" => format!(
            "set xlabel 'frequency (MHz)'\nset ylabel 'intensity'\nplot '{file}' using \"freq_mhz\":\"intensity\" with lines title 'spectrum'\n"
        ),
        "freq_mhz,difference" => format!(
            "set xlabel 'frequency (MHz)'\nset ylabel 'pumped - unpumped'\nplot '{file}' using \"freq_mhz\":\"difference\" with lines title 'difference'\n"
        ),
        "freq_mhz,unpumped,pumped,difference" => format!(
            "set xlabel 'frequency (MHz)'\nset ylabel 'absorption'\nplot '{file}' using \"freq_mhz\":\"unpumped\" with lines title 'unpumped', \\\n     '' using \"freq_mhz\":\"pumped\" with lines title 'pumped', \\\n     '' using \"freq_mhz\":\"difference\" with lines title 'difference'\n"
        ),
        "delta_mhz,n_g3" => format!(
            "set xlabel 'class detuning delta (MHz)'\nset ylabel 'g3 population'\nset yrange [0:1.05]\nplot '{file}' using \"delta_mhz\":\"n_g3\" with lines title 'n_g3'\n"
        ),
        "density,excited_sites,fwhm_mhz,fwhm_err_mhz" => format!(
            "set xlabel 'excited fraction'\nset ylabel 'FWHM (MHz)'\nplot '{file}' using \"density\":\"fwhm_mhz\":\"fwhm_err_mhz\" with yerrorlines title 'ground-ion line'\n"
        ),
        "purity,mhz" => format!(
            "set xlabel 'isotopic purity'\nset ylabel 'residual broadening (MHz)'\nset logscale y\nplot '{file}' using \"purity\":\"mhz\" with linespoints title 'residual'\n"
        ),
        "t,site,event" => format!(
            "set xlabel 't (s)'\nset ylabel 'site'\nplot '{file}' using \"t\":\"site\" with points pt 7 ps 0.3 title 'events'\n"
        ),
        "" => return Err(Error::Empty("csv header")),
        other => return Err(Error::invalid("csv header", format!("unrecognized header `{other}`"))),
    };
    Ok(format!(
        "# gnuplot script for {file}\nset datafile separator ','\nset key autotitle columnhead\n{body}"
    ))
}

/// Reads `csv` and returns the script file name and contents to place next to it.
pub fn emit_plot(csv: &Path) -> Result<(String, String)> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| Error::invalid("csv", format!("cannot read {}: {e}", csv.display())))?;
    let header = text.lines().next().unwrap_or("");
    let file = csv
        .file_name()
        .and_then(|f| f.to_str())
        .ok_or_else(|| Error::invalid("csv", "path has no file name"))?;
    let stem = csv.file_stem().and_then(|f| f.to_str()).unwrap_or(file);
    Ok((format!("{stem}.gp"), gnuplot_script(header, file)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognized_headers() {
        assert!(gnuplot_script("freq_mhz,intensity", "s.csv")
            .unwrap()
            .contains("\"freq_mhz\""));
        assert!(gnuplot_script("delta_mhz,n_g3", "p.csv")
            .unwrap()
            .contains("\"delta_mhz\""));
        assert!(gnuplot_script("", "e.csv").is_err());
        assert!(gnuplot_script("a,b", "e.csv").is_err());
    }
}
