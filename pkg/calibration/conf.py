class dotdict(dict):
    """dot.notation access to dictionary attributes"""
    __getattr__ = dict.get
    __setattr__ = dict.__setitem__
    __delattr__ = dict.__delitem__


conf = dotdict({
    'T_M': 0.5,  # matching threshold
    'T_C': 0.8,  # calibration threshold
    'HISTOGRAM_EDGES': (0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    'AGGREGATE_ROWS': ((0.5, 0.8), (0.5, 1.0)),
    'IMAGE_EXT': '.jpg',
    'DETECTION_EXT': '.txt',
    'DECIMALS': 2,
    'REFERENCE_ADC': 0.568973,  # published ADC of a WIDER train run, usable with --adc
})

rounding = dotdict({
    'DECIMAL': 'decimal',
    'INTEGER': 'integer',
})
