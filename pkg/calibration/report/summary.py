import json
from dataclasses import dataclass, field

from calibration.report.losses import loss_delta_report, loss_summary


@dataclass(frozen=True)
class RunSummary:
    predictor: str
    adc: float
    t_m: float
    t_c: float
    calibrated: int
    wall_time: float
    counters: dict = field(default_factory=dict)
    adc_details: dict = None

    def interval(self):
        return "[{:g}, {:g}]".format(self.t_m, self.t_c)

    def line(self):
        """One-line summary with the columns Predictor, ADC, interval, Calibrated, Time(s)"""
        return "predictor {} | ADC {:.6f} | interval {} | calibrated {} | time {:.2f}s".format(
            self.predictor, self.adc, self.interval(), self.calibrated, self.wall_time)

    def get_data(self):
        return {
            'predictor': self.predictor,
            'adc': self.adc,
            'adc_details': self.adc_details,
            'interval': [self.t_m, self.t_c],
            'calibrated': self.calibrated,
            'wall_time': self.wall_time,
            'counters': dict(self.counters),
        }


def run_summary(result, adc, cfg, predictor="unknown"):
    """
    Summary of a calibration run.

    Args:
        result (CalibrationResult): calibration output
        adc (AdcResult): computed ADC, None when the ADC was given on the command line
        cfg (CalibrationConfig): thresholds used
        predictor (str): name of the model that produced the detections

    Returns:
        (RunSummary): summary, calibrated == len(result.mbps)
    """
    return RunSummary(
        predictor=predictor,
        adc=result.adc,
        t_m=cfg.t_m,
        t_c=cfg.t_c,
        calibrated=len(result.mbps),
        wall_time=result.wall_time,
        counters=result.counters.get_data(),
        adc_details=adc.get_data() if adc is not None else None,
    )


def build_report(summary, histogram=None, mbps=None):
    """
    Packs summary, histogram and loss comparison in a dictionary ready for JSON output.

    Args:
        summary (RunSummary): run summary
        histogram (LocalizationHistogram): optional localization histogram
        mbps (list of MbpRecord): optional replacement ledger for the loss comparison

    Returns:
        (dict): report
    """
    data = summary.get_data()
    data['histogram'] = histogram.get_data() if histogram is not None else None
    data['loss'] = loss_summary(loss_delta_report(mbps)) if mbps is not None else None
    return data


def save_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as outfile:
        json.dump(report, outfile, indent=2, sort_keys=True)
        outfile.write("\n")
