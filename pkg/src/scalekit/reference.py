"""Published complexity and epoch-time figures for the baseline and scaled models.

Values are ``(flops, params, acts, epoch_minutes)`` in absolute units.
Epoch time is one training epoch over ~1.2M images on 8 GPUs.
"""

EFFICIENTNET = {
    "EfficientNet-B0": (0.4e9, 5.3e6, 6.7e6, 2.8),
    "EfficientNet-B1": (0.7e9, 7.8e6, 10.9e6, 4.6),
    "EfficientNet-B2": (1.0e9, 9.1e6, 13.8e6, 5.9),
    "EfficientNet-B3": (1.8e9, 12.2e6, 23.8e6, 9.5),
    "EfficientNet-B4": (4.4e9, 19.3e6, 49.5e6, 19.2),
    "EfficientNet-B5": (10.3e9, 30.4e6, 98.9e6, 40.8),
}

REGNET = {
    "RegNetY-500MF": (0.5e9, 5.6e6, 4.2e6, 2.3),
    "RegNetZ-500MF": (0.5e9, 7.1e6, 5.9e6, 3.1),
    "RegNetY-4GF-224": (4.0e9, 20.6e6, 12.3e6, 6.4),
    "RegNetY-4GF": (4.1e9, 22.4e6, 14.5e6, 7.7),
    "RegNetZ-4GF-224": (4.0e9, 26.9e6, 20.8e6, 11.3),
    "RegNetZ-4GF": (4.0e9, 28.1e6, 24.3e6, 11.7),
}

# models scaled with alpha = 0.8
SCALED = {
    "EfficientNet-B0->4GF": (4.1e9, 36.1e6, 29.2e6, 11.1),
    "RegNetY-500MF->4GF": (4.1e9, 36.2e6, 13.3e6, 7.2),
    "RegNetZ-500MF->4GF": (4.0e9, 41.1e6, 19.4e6, 10.5),
    "EfficientNet-B0->16GF": (16.2e9, 122.8e6, 61.8e6, 25.8),
    "RegNetY-500MF->16GF": (16.2e9, 112.7e6, 29.4e6, 17.8),
    "RegNetY-4GF->16GF": (15.5e9, 72.3e6, 30.7e6, 16.4),
    "RegNetZ-500MF->16GF": (16.2e9, 134.8e6, 42.6e6, 29.4),
    "RegNetZ-4GF->16GF": (15.9e9, 95.3e6, 51.3e6, 33.2),
}

PUBLISHED = {**EFFICIENTNET, **REGNET, **SCALED}
