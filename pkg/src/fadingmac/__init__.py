"""802.11 MAC behaviour over log-normal fading channels.

Submodules: ``propagation`` (channel model), ``analytic`` (retry and
backoff closed forms), ``geometry`` (capture regions), ``macsim``
(discrete-event DCF simulator), ``scenarios`` (experiments) and ``cli``.
"""

__version__ = "0.1.0"
