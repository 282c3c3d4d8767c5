"""Screens of a rigged and an honest tender, and what subgroups add.

A cartel of four submits a low winning bid and three tight cover bids; two
outsiders bid independently. On all six bids the cartel pattern is diluted,
while the most regular four-bid subgroup still shows it.
"""

from bidscreen import Tender
from bidscreen.screens import screen_vector
from bidscreen.subgroups import subgroup_summary

rigged = Tender.from_values("rigged", [1000, 1061, 1064, 1069, 1180, 1320])
honest = Tender.from_values("honest", [1000, 1085, 1140, 1210, 1290, 1330])

for t in (rigged, honest):
    sv = screen_vector(t)
    sub = subgroup_summary(t)
    print(f"{t.tender_id:7s} CV {100 * sv.cv:5.2f}%  RD {sv.rd:5.2f}  "
          f"MIN4CV {100 * sub['MIN4CV']:5.2f}%  MAX4RD {sub['MAX4RD']:6.2f}  "
          f"({sub.subgroup_count_4} four-bid subgroups)")
